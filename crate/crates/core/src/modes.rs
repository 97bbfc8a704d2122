//! Local plane-wave modes at fixed comoving frequency.
//!
//! Eliminating `k = (ω − ω′/γ)/u` from the cleared Sellmeier relation gives a
//! degree-8 real polynomial in the lab frequency ω. Its eight roots are the
//! local modes of one homogeneous region: propagating modes have real (ω, k),
//! the rest come in complex-conjugate evanescent pairs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RifError};
use crate::medium::{ComovingWave, FrontFrame, LabWave, SellmeierMedium, Side};
use crate::polynomial::Polynomial;

/// Index of the optical branch (the one spanning visible lab wavelengths).
pub const OPTICAL_BRANCH: u8 = 2;

/// Numerical tolerances for mode solving and classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSettings {
    /// A root is propagating when `|Im ω| ≤ tol·|Re ω|` after polishing.
    pub propagation_tolerance: f64,
    /// Relative distance (in units of the largest SLI edge) below which a
    /// comoving frequency is treated as sitting on an SLI edge.
    pub edge_tolerance: f64,
    /// Largest acceptable normalized dispersion residual of a polished root.
    pub residual_tolerance: f64,
}

impl Default for ModeSettings {
    fn default() -> Self {
        Self {
            propagation_tolerance: 1e-8,
            edge_tolerance: 1e-9,
            residual_tolerance: 1e-9,
        }
    }
}

/// Sign of the conserved norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NormSign {
    Negative,
    Positive,
}

impl NormSign {
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            NormSign::Negative
        } else {
            NormSign::Positive
        }
    }

    pub fn value(self) -> f64 {
        match self {
            NormSign::Positive => 1.0,
            NormSign::Negative => -1.0,
        }
    }
}

/// What a root is, independent of the side it lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    /// Negative-norm optical mode.
    No,
    /// Lower optical mode (smallest k′ of the positive optical triple).
    Lo,
    /// Middle optical mode, the only one with positive comoving group velocity.
    Mo,
    /// Upper optical mode.
    Uo,
    /// Propagating mode on a non-optical branch.
    Branch { index: u8, norm: NormSign },
    EvanescentGrow,
    EvanescentDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub kind: ModeKind,
    pub side: Side,
}

impl ModeLabel {
    pub fn new(kind: ModeKind, side: Side) -> Self {
        Self { kind, side }
    }

    pub fn is_optical(&self) -> bool {
        matches!(
            self.kind,
            ModeKind::No | ModeKind::Lo | ModeKind::Mo | ModeKind::Uo
        )
    }

    /// Column ordering: side, then branch, then position within the branch.
    pub fn ordering_key(&self) -> (Side, u8, u8) {
        let (branch, within) = match self.kind {
            ModeKind::No => (OPTICAL_BRANCH, 0),
            ModeKind::Lo => (OPTICAL_BRANCH, 1),
            ModeKind::Mo => (OPTICAL_BRANCH, 2),
            ModeKind::Uo => (OPTICAL_BRANCH, 3),
            ModeKind::Branch { index, norm } => (index, norm as u8),
            ModeKind::EvanescentDecay => (u8::MAX, 0),
            ModeKind::EvanescentGrow => (u8::MAX, 1),
        };
        (self.side, branch, within)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.side.suffix();
        match self.kind {
            ModeKind::No => write!(f, "no{s}"),
            ModeKind::Lo => write!(f, "lo{s}"),
            ModeKind::Mo => write!(f, "mo{s}"),
            ModeKind::Uo => write!(f, "uo{s}"),
            ModeKind::Branch { index, norm } => {
                let n = if norm == NormSign::Positive { 'p' } else { 'n' };
                write!(f, "b{index}{n}{s}")
            }
            ModeKind::EvanescentGrow => write!(f, "evg{s}"),
            ModeKind::EvanescentDecay => write!(f, "evd{s}"),
        }
    }
}

impl FromStr for ModeLabel {
    type Err = RifError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || RifError::UnknownLabel(s.to_string());
        let (body, side) = match s.chars().last() {
            Some('L') => (&s[..s.len() - 1], Side::Left),
            Some('R') => (&s[..s.len() - 1], Side::Right),
            _ => return Err(bad()),
        };
        let kind = match body {
            "no" => ModeKind::No,
            "lo" => ModeKind::Lo,
            "mo" => ModeKind::Mo,
            "uo" => ModeKind::Uo,
            "evg" => ModeKind::EvanescentGrow,
            "evd" => ModeKind::EvanescentDecay,
            b if b.len() == 3 && b.starts_with('b') => {
                let index = b[1..2].parse::<u8>().map_err(|_| bad())?;
                let norm = match &b[2..] {
                    "p" => NormSign::Positive,
                    "n" => NormSign::Negative,
                    _ => return Err(bad()),
                };
                ModeKind::Branch { index, norm }
            }
            _ => return Err(bad()),
        };
        Ok(ModeLabel { kind, side })
    }
}

/// One of the eight solutions at fixed ω′ in one medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRoot {
    pub lab: LabWave,
    pub comoving: ComovingWave,
    pub side: Side,
    pub propagating: bool,
    /// Set for propagating roots only.
    pub norm_sign: Option<NormSign>,
    /// Positive-frequency branch index, 1..=4 ascending in |ω|.
    pub branch: u8,
    pub lab_group_velocity: Option<f64>,
    pub comoving_group_velocity: Option<f64>,
    pub label: Option<ModeLabel>,
    /// Normalized dispersion residual after polishing.
    pub residual: f64,
    /// Imaginary part is within two decades of the propagation threshold.
    pub flagged: bool,
}

impl ModeRoot {
    pub fn omega_prime(&self) -> f64 {
        self.comoving.omega.re
    }

    pub fn k_prime(&self) -> Complex64 {
        self.comoving.k
    }

    pub fn label(&self) -> Result<ModeLabel> {
        self.label.ok_or_else(|| RifError::Classification {
            omega_prime: self.omega_prime(),
            reason: "root has not been labelled".into(),
        })
    }

    /// Deterministic ordering within a side: branch, then k′.
    pub fn order_key(&self, other: &Self) -> Ordering {
        self.branch
            .cmp(&other.branch)
            .then(self.comoving.k.re.total_cmp(&other.comoving.k.re))
            .then(self.comoving.k.im.total_cmp(&other.comoving.k.im))
    }
}

/// Comoving-frequency range over which a side's optical branch has three propagating roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubluminalInterval {
    pub side: Side,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Lab frequency of the edge at `omega_min` (where v_g = u).
    pub lab_omega_at_min: f64,
    /// Lab frequency of the edge at `omega_max` (where v_g = u).
    pub lab_omega_at_max: f64,
}

impl SubluminalInterval {
    pub fn contains(&self, omega_prime: f64) -> bool {
        omega_prime > self.omega_min && omega_prime < self.omega_max
    }

    pub fn width(&self) -> f64 {
        self.omega_max - self.omega_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HorizonConfiguration {
    NoHorizonLow = 1,
    WhiteHole = 2,
    HorizonlessOverlap = 3,
    BlackHole = 4,
    NoHorizonHigh = 5,
}

impl HorizonConfiguration {
    pub fn number(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for HorizonConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HorizonConfiguration::NoHorizonLow => "NoHorizonLow",
            HorizonConfiguration::WhiteHole => "WhiteHole",
            HorizonConfiguration::HorizonlessOverlap => "HorizonlessOverlap",
            HorizonConfiguration::BlackHole => "BlackHole",
            HorizonConfiguration::NoHorizonHigh => "NoHorizonHigh",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationResult {
    pub configuration: HorizonConfiguration,
    /// ω′ lies within the edge tolerance of an SLI edge.
    pub degenerate: bool,
}

/// Degree-8 polynomial in ω whose roots are the modes at comoving frequency `omega_prime`.
///
/// Built as `k(ω)²·ΠDᵢ − ω²·(ΠDᵢ + Σ Bᵢ Π_{j≠i} Dⱼ)` with `k(ω) = (ω − ω′/γ)/u`.
/// Coefficients are real, so complex roots pair up as conjugates.
pub fn dispersion_polynomial(
    medium: &SellmeierMedium,
    omega_prime: f64,
    frame: &FrontFrame,
) -> Result<Polynomial> {
    if !omega_prime.is_finite() {
        return Err(RifError::invalid("omega_prime", "must be finite"));
    }
    let u = frame.u();
    let g = frame.gamma();
    let wr = medium.resonance_frequencies();
    let b = medium.oscillator_strengths();
    let d: Vec<Polynomial> = wr
        .iter()
        .map(|w| Polynomial::new(vec![1.0, 0.0, -1.0 / (w * w)]))
        .collect();
    let k = Polynomial::new(vec![-omega_prime / (g * u), 1.0 / u]);
    let prod = d[0].mul(&d[1]).mul(&d[2]);
    let coupling = d[1]
        .mul(&d[2])
        .scale(b[0])
        .add(&d[0].mul(&d[2]).scale(b[1]))
        .add(&d[0].mul(&d[1]).scale(b[2]));
    let q = prod.add(&coupling);
    let w2 = Polynomial::new(vec![0.0, 0.0, 1.0]);
    let p = k.mul(&k).mul(&prod).add(&w2.mul(&q).scale(-1.0));
    let max = p.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if p.degree() != 8 || p.leading().abs() <= 1e-300 * max.max(1.0) {
        return Err(RifError::DegenerateLeadingCoefficient);
    }
    Ok(p)
}

/// Newton polish of a lab-frequency root on the cleared dispersion function.
fn polish(medium: &SellmeierMedium, omega_prime: f64, frame: &FrontFrame, mut w: Complex64) -> Complex64 {
    let u = frame.u();
    let shift = omega_prime / frame.gamma();
    let mut best = w;
    let mut best_res = f64::INFINITY;
    for _ in 0..60 {
        let k = (w - shift) / u;
        let f = medium.cleared_dispersion(w, k);
        let res = if f.scale > 0.0 { f.value.norm() / f.scale } else { 0.0 };
        if res < best_res {
            best_res = res;
            best = w;
        }
        let df = f.d_omega + f.d_k / u;
        if df.norm() == 0.0 {
            break;
        }
        let step = f.value / df;
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * w.norm() {
            let k = (w - shift) / u;
            let f = medium.cleared_dispersion(w, k);
            let res = if f.scale > 0.0 { f.value.norm() / f.scale } else { 0.0 };
            if res < best_res {
                best = w;
            }
            break;
        }
    }
    best
}

/// Lab-frequency branch index of a root: how many resonances lie below |Re ω|, plus one.
pub fn branch_index(medium: &SellmeierMedium, omega: f64) -> u8 {
    1 + medium
        .resonance_frequencies()
        .iter()
        .filter(|&&wr| omega.abs() > wr)
        .count() as u8
}

/// The eight local modes of `medium` at comoving frequency `omega_prime`, unlabelled.
pub fn solve_modes(
    medium: &SellmeierMedium,
    omega_prime: f64,
    frame: &FrontFrame,
    side: Side,
    settings: &ModeSettings,
) -> Result<Vec<ModeRoot>> {
    if !(omega_prime > 0.0) {
        return Err(RifError::invalid(
            "omega_prime",
            format!("must be positive, got {omega_prime}"),
        ));
    }
    let poly = dispersion_polynomial(medium, omega_prime, frame)?;
    let scale = medium.resonance_frequencies()[1];
    let raw = poly.rescale_variable(scale).roots()?;
    if raw.len() != 8 {
        return Err(RifError::RootCount {
            expected: 8,
            found: raw.len(),
        });
    }
    let tol = settings.propagation_tolerance;
    let mut real_roots = Vec::new();
    let mut upper = Vec::new();
    let mut lower_count = 0;
    for r in raw {
        let w = polish(medium, omega_prime, frame, r * scale);
        if w.im.abs() <= tol * w.re.abs() {
            let w = polish(medium, omega_prime, frame, Complex64::new(w.re, 0.0));
            real_roots.push((Complex64::new(w.re, 0.0), w.im.abs() > tol * 1e-2 * w.re.abs()));
        } else if w.im > 0.0 {
            upper.push(w);
        } else {
            lower_count += 1;
        }
    }
    if upper.len() != lower_count {
        return Err(RifError::Classification {
            omega_prime,
            reason: format!(
                "complex roots do not pair up ({} above, {} below the real axis)",
                upper.len(),
                lower_count
            ),
        });
    }
    let mut omegas: Vec<(Complex64, bool)> = real_roots;
    for w in upper {
        let flagged = w.im.abs() <= 1e2 * tol * w.re.abs();
        omegas.push((w, flagged));
        omegas.push((w.conj(), flagged));
    }
    // distinctness: two guesses polishing onto one root means a lost root
    for i in 0..omegas.len() {
        for j in i + 1..omegas.len() {
            let (a, b) = (omegas[i].0, omegas[j].0);
            if (a - b).norm() <= 1e-11 * a.norm().max(b.norm()) {
                return Err(RifError::RootCount {
                    expected: 8,
                    found: 7,
                });
            }
        }
    }

    let u = frame.u();
    let shift = omega_prime / frame.gamma();
    let mut roots: Vec<ModeRoot> = omegas
        .into_iter()
        .map(|(w, flagged)| {
            let k = (w - shift) / u;
            let lab = LabWave { omega: w, k };
            let mut comoving = frame.to_comoving(lab);
            comoving.omega = Complex64::new(omega_prime, 0.0);
            let propagating = w.im == 0.0;
            let residual = medium.dispersion_residual(w, k).norm();
            let (norm_sign, vg, vgp) = if propagating {
                let vg = medium.group_velocity_at(w, k).re;
                (
                    Some(NormSign::of(w.re)),
                    Some(vg),
                    Some(frame.comoving_velocity(vg)),
                )
            } else {
                (None, None, None)
            };
            ModeRoot {
                lab,
                comoving,
                side,
                propagating,
                norm_sign,
                branch: branch_index(medium, w.re),
                lab_group_velocity: vg,
                comoving_group_velocity: vgp,
                label: None,
                residual,
                flagged,
            }
        })
        .collect();
    if let Some(bad) = roots
        .iter()
        .find(|r| r.residual > settings.residual_tolerance)
    {
        return Err(RifError::Classification {
            omega_prime,
            reason: format!(
                "root ω = {} has dispersion residual {:e}",
                bad.lab.omega, bad.residual
            ),
        });
    }
    roots.sort_by(|a, b| a.order_key(b));
    Ok(roots)
}

/// Bisection for a sign change of `f` on `[a, b]`, to machine resolution.
pub(crate) fn bisect(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Lab-frequency limits `(ω_start, ω_end)` of the positive optical branch,
/// from the band edge `ε = 0` up to the guard band of the UV resonance.
pub fn optical_branch_range(medium: &SellmeierMedium) -> (f64, f64) {
    let [w1, w2, _] = medium.resonance_frequencies();
    let g = medium.guard_band().max(1e-12);
    let lo = w1 * (1.0 + g);
    let hi = w2 * (1.0 - g);
    let eps = |w: f64| medium.permittivity(Complex64::new(w, 0.0)).re;
    let start = if eps(lo) >= 0.0 {
        lo
    } else {
        bisect(lo, hi, eps)
    };
    (start, hi)
}

/// Positive lab-frequency range `(branch, ω_start, ω_end)` of each of the four
/// transparent branches, outside the guard bands; the top branch ends at
/// `top_factor` times the highest resonance frequency.
pub fn branch_ranges(medium: &SellmeierMedium, top_factor: f64) -> Vec<(u8, f64, f64)> {
    let w = medium.resonance_frequencies();
    let g = medium.guard_band().max(1e-12) * (1.0 + 1e-6);
    let eps = |x: f64| medium.permittivity(Complex64::new(x, 0.0)).re;
    let mut out = Vec::with_capacity(4);
    for branch in 1..=4u8 {
        let i = branch as usize - 1;
        let lo = if i == 0 { 0.0 } else { w[i - 1] * (1.0 + g) };
        let hi = if i < 3 { w[i] * (1.0 - g) } else { w[2] * top_factor };
        if hi <= lo || eps(hi) < 0.0 {
            continue;
        }
        let start = if eps(lo) >= 0.0 { lo } else { bisect(lo, hi, eps) };
        out.push((branch, start, hi));
    }
    out
}

/// Number of samples in the dense group-velocity scan used by [`find_sli`].
const SLI_SCAN_POINTS: usize = 4000;

/// Subluminal interval of one side, or `None` when `v_g = u` has no solution
/// on the optical branch.
pub fn find_sli(
    medium: &SellmeierMedium,
    frame: &FrontFrame,
    side: Side,
) -> Result<Option<SubluminalInterval>> {
    let (start, end) = optical_branch_range(medium);
    let u = frame.u();
    let excess = |w: f64| -> f64 {
        match medium.group_velocity(w) {
            Ok(v) => v - u,
            Err(_) => -u,
        }
    };
    // geometric spacing resolves both the IR and UV ends of the branch
    let ratio = (end / start).ln();
    let grid: Vec<f64> = (0..=SLI_SCAN_POINTS)
        .map(|i| start * (ratio * i as f64 / SLI_SCAN_POINTS as f64).exp())
        .collect();
    let mut crossings = Vec::new();
    let mut prev = excess(grid[0]);
    for pair in grid.windows(2) {
        let cur = excess(pair[1]);
        if (prev < 0.0) != (cur < 0.0) {
            crossings.push(bisect(pair[0], pair[1], excess));
        }
        prev = cur;
    }
    match crossings.len() {
        0 => Ok(None),
        2 => {
            let g = frame.gamma();
            let wp = |w: f64| -> Result<f64> {
                let n = medium.refractive_index(w)?;
                Ok(g * w * (1.0 - u * n))
            };
            let (a, b) = (crossings[0], crossings[1]);
            let (wa, wb) = (wp(a)?, wp(b)?);
            let (omega_min, lab_min, omega_max, lab_max) = if wa <= wb {
                (wa, a, wb, b)
            } else {
                (wb, b, wa, a)
            };
            Ok(Some(SubluminalInterval {
                side,
                omega_min,
                omega_max,
                lab_omega_at_min: lab_min,
                lab_omega_at_max: lab_max,
            }))
        }
        n => Err(RifError::Classification {
            omega_prime: f64::NAN,
            reason: format!("optical branch has {n} points with v_g = u; expected 0 or 2"),
        }),
    }
}

/// Horizon configuration at `omega_prime`, from the two sides' subluminal intervals.
///
/// With both intervals present in the generic ordering this reproduces the five
/// cases `minL < minR < maxL < maxR`. When a side has no interval, or the
/// intervals are disjoint, the configuration follows from which sides hold three
/// optical modes, and the right side decides between the two horizonless cases.
pub fn configuration(
    omega_prime: f64,
    left: Option<&SubluminalInterval>,
    right: Option<&SubluminalInterval>,
    edge_tolerance: f64,
) -> ConfigurationResult {
    let edges: Vec<f64> = [left, right]
        .iter()
        .flatten()
        .flat_map(|s| [s.omega_min, s.omega_max])
        .collect();
    let top = edges.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let degenerate = edges
        .iter()
        .any(|e| (omega_prime - e).abs() <= edge_tolerance * top);
    let inside = |s: Option<&SubluminalInterval>| s.is_some_and(|s| s.contains(omega_prime));
    let below_right = match right.or(left) {
        Some(s) => omega_prime <= s.omega_min,
        None => true,
    };
    let configuration = match (inside(left), inside(right)) {
        (true, true) => HorizonConfiguration::HorizonlessOverlap,
        (true, false) => HorizonConfiguration::WhiteHole,
        (false, true) => HorizonConfiguration::BlackHole,
        (false, false) if below_right => HorizonConfiguration::NoHorizonLow,
        (false, false) => HorizonConfiguration::NoHorizonHigh,
    };
    ConfigurationResult {
        configuration,
        degenerate,
    }
}

/// Assigns labels to one side's roots.
///
/// Positive optical roots become lo/mo/uo by ascending k′ when three propagate;
/// a single survivor is `uo` below the interval and `lo` above it (or when the
/// side has no interval). The negative optical root is `no`; evanescent roots
/// are split by whether they decay away from the front.
pub fn label_roots(
    roots: &[ModeRoot],
    sli: Option<&SubluminalInterval>,
) -> Result<Vec<ModeRoot>> {
    let mut out = roots.to_vec();
    let Some(first) = roots.first() else {
        return Ok(out);
    };
    let omega_prime = first.omega_prime();
    let side = first.side;
    let fail = |reason: String| RifError::Classification {
        omega_prime,
        reason,
    };

    let mut optical_pos: Vec<usize> = Vec::new();
    let mut optical_neg: Vec<usize> = Vec::new();
    for (i, r) in out.iter_mut().enumerate() {
        if r.side != side {
            return Err(fail("roots from both sides passed to label_roots".into()));
        }
        if !r.propagating {
            let decays = match side {
                Side::Left => r.comoving.k.im < 0.0,
                Side::Right => r.comoving.k.im > 0.0,
            };
            let kind = if decays {
                ModeKind::EvanescentDecay
            } else {
                ModeKind::EvanescentGrow
            };
            r.label = Some(ModeLabel::new(kind, side));
            continue;
        }
        let norm = r.norm_sign.expect("propagating roots carry a norm sign");
        if r.branch == OPTICAL_BRANCH {
            match norm {
                NormSign::Positive => optical_pos.push(i),
                NormSign::Negative => optical_neg.push(i),
            }
        } else {
            r.label = Some(ModeLabel::new(
                ModeKind::Branch {
                    index: r.branch,
                    norm,
                },
                side,
            ));
        }
    }

    if optical_neg.len() != 1 {
        return Err(fail(format!(
            "expected one negative-norm optical root, found {}",
            optical_neg.len()
        )));
    }
    out[optical_neg[0]].label = Some(ModeLabel::new(ModeKind::No, side));

    match optical_pos.len() {
        3 => {
            if let Some(s) = sli {
                if !s.contains(omega_prime) {
                    return Err(fail(
                        "three optical roots outside the subluminal interval".into(),
                    ));
                }
            } else {
                return Err(fail("three optical roots but no subluminal interval".into()));
            }
            optical_pos.sort_by(|&a, &b| out[a].comoving.k.re.total_cmp(&out[b].comoving.k.re));
            for (idx, kind) in optical_pos.iter().zip([ModeKind::Lo, ModeKind::Mo, ModeKind::Uo]) {
                out[*idx].label = Some(ModeLabel::new(kind, side));
            }
        }
        1 => {
            let kind = match sli {
                Some(s) if s.contains(omega_prime) => {
                    return Err(fail(
                        "single optical root inside the subluminal interval".into(),
                    ))
                }
                Some(s) if omega_prime <= s.omega_min => ModeKind::Uo,
                _ => ModeKind::Lo,
            };
            out[optical_pos[0]].label = Some(ModeLabel::new(kind, side));
        }
        n => {
            return Err(fail(format!(
                "expected 1 or 3 positive optical roots, found {n}"
            )))
        }
    }

    let mut labels: Vec<ModeLabel> = out.iter().filter_map(|r| r.label).collect();
    labels.sort();
    if labels.len() != out.len() || labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(fail("mode labels are not unique".into()));
    }
    Ok(out)
}

/// Solves and labels the local modes of one side.
pub fn labelled_modes(
    medium: &SellmeierMedium,
    omega_prime: f64,
    frame: &FrontFrame,
    side: Side,
    sli: Option<&SubluminalInterval>,
    settings: &ModeSettings,
) -> Result<Vec<ModeRoot>> {
    let roots = solve_modes(medium, omega_prime, frame, side, settings)?;
    label_roots(&roots, sli)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::IndexStep;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn silica() -> SellmeierMedium {
        SellmeierMedium::fused_silica()
    }

    fn frame() -> FrontFrame {
        FrontFrame::new(0.66).unwrap()
    }

    fn sli(m: &SellmeierMedium, side: Side) -> SubluminalInterval {
        find_sli(m, &frame(), side).unwrap().unwrap()
    }

    /// Independent SLI oracle: walk the optical branch in k, solving the real
    /// dispersion relation for ω by bisection, and locate the extrema of
    /// ω′(k) = γ(ω − uk) from sign changes of its finite difference.
    fn sli_oracle(m: &SellmeierMedium, u: f64) -> (f64, f64) {
        let g = 1.0 / (1.0 - u * u).sqrt();
        let [w1, w2, _] = m.resonance_frequencies();
        let omega_of_k = |k: f64| {
            // on the optical branch k²/ω² − ε(ω) increases monotonically... solve
            // k − n(ω)ω = 0 on (band edge, ω2)
            let f = |w: f64| {
                let e = m.permittivity(Complex64::new(w, 0.0)).re;
                if e <= 0.0 {
                    k
                } else {
                    k - e.sqrt() * w
                }
            };
            bisect(w1 * (1.0 + 1e-9), w2 * (1.0 - 1e-12), f)
        };
        let wp = |k: f64| g * (omega_of_k(k) - u * k);
        let ks: Vec<f64> = (1..20000).map(|i| 0.5 + i as f64 * 0.005).collect();
        let vals: Vec<f64> = ks.iter().map(|&k| wp(k)).collect();
        let mut extrema = Vec::new();
        for i in 1..vals.len() - 1 {
            let d1 = vals[i] - vals[i - 1];
            let d2 = vals[i + 1] - vals[i];
            if (d1 < 0.0) != (d2 < 0.0) {
                // golden refinement of the extremum on [k_{i-1}, k_{i+1}]
                let sign = if d1 > 0.0 { -1.0 } else { 1.0 };
                let (mut a, mut b) = (ks[i - 1], ks[i + 1]);
                let r = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..100 {
                    let c = b - r * (b - a);
                    let d = a + r * (b - a);
                    if sign * wp(c) < sign * wp(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                extrema.push(wp(0.5 * (a + b)));
            }
        }
        assert_eq!(extrema.len(), 2, "oracle extrema {extrema:?}");
        (extrema[0].min(extrema[1]), extrema[0].max(extrema[1]))
    }

    #[test]
    fn four_transparent_branches_with_real_index() {
        let m = SellmeierMedium::fused_silica();
        let r = branch_ranges(&m, 3.0);
        assert_eq!(r.iter().map(|b| b.0).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        for (_, a, b) in &r {
            assert!(a < b);
            for t in [0.01, 0.5, 0.99] {
                let w = a + t * (b - a);
                assert!(m.refractive_index(w).unwrap() > 0.0);
            }
        }
        assert_relative_eq!(r[1].1, optical_branch_range(&m).0, max_relative = 1e-12);
    }

    #[test]
    fn polynomial_is_degree_eight_with_real_coefficients() {
        let p = dispersion_polynomial(&silica(), 0.3, &frame()).unwrap();
        assert_eq!(p.degree(), 8);
        // real coefficients: conjugate inputs give conjugate outputs
        let z = Complex64::new(3.1, 0.7);
        let a = p.eval(z);
        let b = p.eval(z.conj());
        assert!((a.conj() - b).norm() <= 1e-14 * a.norm());
    }

    #[test]
    fn polynomial_matches_cleared_residual() {
        let m = silica();
        let f = frame();
        let wp = 0.37;
        let p = dispersion_polynomial(&m, wp, &f).unwrap();
        for z in [Complex64::new(0.5, 0.1), Complex64::new(20.0, -2.0), Complex64::new(-70.0, 0.3)] {
            let k = (z - wp / f.gamma()) / f.u();
            let cleared = m.cleared_dispersion(z, k).value;
            assert!((p.eval(z) - cleared).norm() <= 1e-10 * cleared.norm().max(1.0));
        }
    }

    #[test]
    fn vacuum_polynomial_has_light_cone_roots() {
        let m = SellmeierMedium::vacuum();
        let f = frame();
        let wp = 0.5;
        let p = dispersion_polynomial(&m, wp, &f).unwrap();
        let roots = p.rescale_variable(50.0).roots().unwrap();
        let roots: Vec<Complex64> = roots.iter().map(|r| r * 50.0).collect();
        for expected in [wp / (f.gamma() * (1.0 - f.u())), wp / (f.gamma() * (1.0 + f.u()))] {
            assert!(roots.iter().any(|r| (r - expected).norm() < 1e-8 * expected));
        }
        // remaining roots are the cleared denominators ±ωᵢ
        for wr in m.resonance_frequencies() {
            assert!(roots.iter().any(|r| (r - wr).norm() < 1e-6 * wr));
            assert!(roots.iter().any(|r| (r + wr).norm() < 1e-6 * wr));
        }
    }

    #[test]
    fn sli_matches_independent_oracle() {
        let m = silica();
        let s = sli(&m, Side::Right);
        let (lo, hi) = sli_oracle(&m, 0.66);
        assert_relative_eq!(s.omega_min, lo, max_relative = 1e-9);
        assert_relative_eq!(s.omega_max, hi, max_relative = 1e-9);
        // frozen values in c/µm
        assert_relative_eq!(s.omega_min, 0.172_116_943_4, max_relative = 1e-8);
        assert_relative_eq!(s.omega_max, 0.622_241_876_4, max_relative = 1e-8);
    }

    #[test]
    fn left_sli_shifts_down() {
        let step = IndexStep::new(silica(), 0.02).unwrap();
        let r = sli(step.right(), Side::Right);
        let l = sli(step.left(), Side::Left);
        assert!(l.omega_min < r.omega_min);
        assert!(l.omega_max < r.omega_max);
        assert!(l.omega_min < r.omega_min && r.omega_min < l.omega_max && l.omega_max < r.omega_max);
        let same = IndexStep::new(silica(), 0.0).unwrap();
        assert_eq!(
            find_sli(same.left(), &frame(), Side::Right).unwrap(),
            find_sli(same.right(), &frame(), Side::Right).unwrap()
        );
    }

    #[test]
    fn no_sli_for_fast_front() {
        // faster than every optical group velocity
        let f = FrontFrame::new(0.9).unwrap();
        assert!(find_sli(&silica(), &f, Side::Right).unwrap().is_none());
    }

    #[test]
    fn eight_propagating_roots_inside_sli() {
        let m = silica();
        let s = sli(&m, Side::Right);
        let wp = 0.5 * (s.omega_min + s.omega_max);
        let roots = labelled_modes(&m, wp, &frame(), Side::Right, Some(&s), &ModeSettings::default()).unwrap();
        assert_eq!(roots.len(), 8);
        assert!(roots.iter().all(|r| r.propagating));
        let optical = roots
            .iter()
            .filter(|r| r.branch == OPTICAL_BRANCH && r.norm_sign == Some(NormSign::Positive))
            .count();
        assert_eq!(optical, 3);
        for r in &roots {
            assert!(r.residual <= 1e-12, "residual {}", r.residual);
        }
    }

    #[test]
    fn one_evanescent_pair_above_sli() {
        let m = silica();
        let s = sli(&m, Side::Right);
        let wp = s.omega_max * 1.05;
        let roots = solve_modes(&m, wp, &frame(), Side::Right, &ModeSettings::default()).unwrap();
        assert_eq!(roots.iter().filter(|r| r.propagating).count(), 6);
        let ev: Vec<_> = roots.iter().filter(|r| !r.propagating).collect();
        assert_eq!(ev.len(), 2);
        assert!((ev[0].lab.omega - ev[1].lab.omega.conj()).norm() <= 1e-15 * ev[0].lab.omega.norm());
    }

    #[test]
    fn mo_is_the_only_positive_comoving_group_velocity() {
        let m = silica();
        let s = sli(&m, Side::Right);
        for t in [0.1, 0.5, 0.9] {
            let wp = s.omega_min + t * s.width();
            let roots = labelled_modes(&m, wp, &frame(), Side::Right, Some(&s), &ModeSettings::default()).unwrap();
            for r in &roots {
                let v = r.comoving_group_velocity.unwrap();
                let kind = r.label.unwrap().kind;
                assert_eq!(v > 0.0, kind == ModeKind::Mo, "{} has v' = {v}", r.label.unwrap());
                if matches!(kind, ModeKind::Lo | ModeKind::Mo | ModeKind::Uo) {
                    assert!(r.lab_group_velocity.unwrap() > 0.0);
                }
            }
            let k = |kind| {
                roots
                    .iter()
                    .find(|r| r.label.unwrap().kind == kind)
                    .unwrap()
                    .comoving
                    .k
                    .re
            };
            assert!(k(ModeKind::Lo) < k(ModeKind::Mo) && k(ModeKind::Mo) < k(ModeKind::Uo));
        }
    }

    #[test]
    fn survivor_labels_outside_sli() {
        let m = silica();
        let s = sli(&m, Side::Right);
        let settings = ModeSettings::default();
        let below = labelled_modes(&m, 0.8 * s.omega_min, &frame(), Side::Right, Some(&s), &settings).unwrap();
        let above = labelled_modes(&m, 1.1 * s.omega_max, &frame(), Side::Right, Some(&s), &settings).unwrap();
        let kinds = |v: &[ModeRoot]| v.iter().map(|r| r.label.unwrap().kind).collect::<Vec<_>>();
        assert!(kinds(&below).contains(&ModeKind::Uo) && !kinds(&below).contains(&ModeKind::Lo));
        assert!(kinds(&above).contains(&ModeKind::Lo) && !kinds(&above).contains(&ModeKind::Uo));
        for v in [&below, &above] {
            assert!(kinds(v).contains(&ModeKind::No));
            assert!(kinds(v).contains(&ModeKind::EvanescentDecay));
            assert!(kinds(v).contains(&ModeKind::EvanescentGrow));
        }
    }

    #[test]
    fn configurations_for_two_percent_step() {
        let step = IndexStep::new(silica(), 0.02).unwrap();
        let r = sli(step.right(), Side::Right);
        let l = sli(step.left(), Side::Left);
        let cfg = |w| configuration(w, Some(&l), Some(&r), 1e-9).configuration;
        assert_eq!(cfg(0.5 * l.omega_min), HorizonConfiguration::NoHorizonLow);
        assert_eq!(cfg(0.5 * (l.omega_min + r.omega_min)), HorizonConfiguration::WhiteHole);
        assert_eq!(cfg(0.5 * (r.omega_min + l.omega_max)), HorizonConfiguration::HorizonlessOverlap);
        assert_eq!(cfg(0.5 * (l.omega_max + r.omega_max)), HorizonConfiguration::BlackHole);
        assert_eq!(cfg(1.1 * r.omega_max), HorizonConfiguration::NoHorizonHigh);
        assert!(configuration(l.omega_max, Some(&l), Some(&r), 1e-9).degenerate);
        assert!(!configuration(0.3, Some(&l), Some(&r), 1e-9).degenerate);
        // empty left interval: only 1, 4 and 5 remain
        let c = |w| configuration(w, None, Some(&r), 1e-9).configuration;
        assert_eq!(c(0.5 * r.omega_min), HorizonConfiguration::NoHorizonLow);
        assert_eq!(c(0.5 * (r.omega_min + r.omega_max)), HorizonConfiguration::BlackHole);
        assert_eq!(c(1.1 * r.omega_max), HorizonConfiguration::NoHorizonHigh);
    }

    #[test]
    fn label_round_trip_through_strings() {
        for s in ["noL", "moR", "b1pL", "b3nR", "evgL", "evdR", "uoL", "loR"] {
            assert_eq!(s.parse::<ModeLabel>().unwrap().to_string(), s);
        }
        assert!("xx".parse::<ModeLabel>().is_err());
        assert!("moX".parse::<ModeLabel>().is_err());
    }

    #[test]
    fn labels_are_continuous_across_a_fine_grid() {
        let m = silica();
        let f = frame();
        let s = sli(&m, Side::Right);
        let settings = ModeSettings::default();
        let grid: Vec<f64> = (1..400).map(|i| 0.1 + 0.7 * i as f64 / 400.0).collect();
        let mut prev: Option<Vec<ModeRoot>> = None;
        for &wp in &grid {
            if (wp - s.omega_min).abs() < 1e-6 || (wp - s.omega_max).abs() < 1e-6 {
                continue;
            }
            let cur = labelled_modes(&m, wp, &f, Side::Right, Some(&s), &settings).unwrap();
            if let Some(p) = &prev {
                let crossed = [s.omega_min, s.omega_max]
                    .iter()
                    .any(|&e| (p[0].omega_prime() - e) * (wp - e) < 0.0);
                if !crossed {
                    // track each propagating root to its nearest neighbour in lab ω
                    for r in cur.iter().filter(|r| r.propagating) {
                        let nearest = p
                            .iter()
                            .filter(|q| q.propagating)
                            .min_by(|a, b| {
                                (a.lab.omega - r.lab.omega)
                                    .norm()
                                    .total_cmp(&(b.lab.omega - r.lab.omega).norm())
                            })
                            .unwrap();
                        assert_eq!(nearest.label, r.label, "label swap at ω' = {wp}");
                    }
                }
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn lab_frequency_of_no_mode_is_deep_uv() {
        let m = silica();
        let s = sli(&m, Side::Right);
        let roots = labelled_modes(&m, 0.4, &frame(), Side::Right, Some(&s), &ModeSettings::default()).unwrap();
        let no = roots.iter().find(|r| r.label.unwrap().kind == ModeKind::No).unwrap();
        let lambda_nm = 2.0 * PI / no.lab.omega.re.abs() * 1e3;
        assert!(lambda_nm > 200.0 && lambda_nm < 250.0, "{lambda_nm}");
    }
}
