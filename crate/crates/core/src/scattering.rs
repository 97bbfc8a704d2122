//! Global modes across the step and the scattering matrix at fixed ω′.
//!
//! A global mode is a superposition of local modes on each side whose fields
//! `(A, Pᵢ)` and their ζ-derivatives are continuous at ζ = 0. Incoming local
//! modes move towards the step (`v′_g > 0` on the left, `v′_g < 0` on the
//! right); only evanescent modes that decay away from the step are admitted.
//! For every ω′ this leaves eight unknowns for eight matching equations.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RifError};
use crate::fields::{mode_vector, PolarizedMode};
use crate::medium::{FrontFrame, IndexStep, Side};
use crate::modes::{
    configuration, find_sli, labelled_modes, ConfigurationResult, ModeKind, ModeLabel, ModeRoot,
    ModeSettings, NormSign, SubluminalInterval,
};

/// Number of continuity conditions at the step.
pub const MATCHING_EQUATIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSettings {
    pub modes: ModeSettings,
    /// Points whose equilibrated matching matrix exceeds this condition number are rejected.
    pub condition_limit: f64,
    /// Largest accepted pseudo-unitarity residual.
    pub unitarity_tolerance: f64,
}

impl Default for ScatteringSettings {
    fn default() -> Self {
        Self {
            modes: ModeSettings::default(),
            condition_limit: 1e12,
            unitarity_tolerance: 1e-8,
        }
    }
}

/// An index step seen from a front moving at fixed speed, with both subluminal intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    step: IndexStep,
    frame: FrontFrame,
    settings: ScatteringSettings,
    sli_left: Option<SubluminalInterval>,
    sli_right: Option<SubluminalInterval>,
}

impl Scenario {
    pub fn new(step: IndexStep, frame: FrontFrame, settings: ScatteringSettings) -> Result<Self> {
        let sli_left = find_sli(step.left(), &frame, Side::Left)?;
        let sli_right = find_sli(step.right(), &frame, Side::Right)?;
        Ok(Self {
            step,
            frame,
            settings,
            sli_left,
            sli_right,
        })
    }

    pub fn step(&self) -> &IndexStep {
        &self.step
    }

    pub fn frame(&self) -> &FrontFrame {
        &self.frame
    }

    pub fn settings(&self) -> &ScatteringSettings {
        &self.settings
    }

    pub fn sli(&self, side: Side) -> Option<&SubluminalInterval> {
        match side {
            Side::Left => self.sli_left.as_ref(),
            Side::Right => self.sli_right.as_ref(),
        }
    }

    pub fn configuration(&self, omega_prime: f64) -> ConfigurationResult {
        configuration(
            omega_prime,
            self.sli_left.as_ref(),
            self.sli_right.as_ref(),
            self.settings.modes.edge_tolerance,
        )
    }

    /// Sorted SLI edges of both sides.
    pub fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = [self.sli_left, self.sli_right]
            .iter()
            .flatten()
            .flat_map(|s| [s.omega_min, s.omega_max])
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Labelled, vector-valued local modes of both sides at `omega_prime`.
    pub fn local_modes(&self, omega_prime: f64) -> Result<LocalModeSet> {
        if self.configuration(omega_prime).degenerate {
            return Err(RifError::EdgeDegenerate { omega_prime });
        }
        let mut modes = Vec::with_capacity(16);
        for side in [Side::Left, Side::Right] {
            let medium = self.step.medium(side);
            let roots = labelled_modes(
                medium,
                omega_prime,
                &self.frame,
                side,
                self.sli(side),
                &self.settings.modes,
            )?;
            for root in roots {
                let vector = mode_vector(medium, &root, &self.frame)?;
                modes.push(LocalMode::new(vector)?);
            }
        }
        Ok(LocalModeSet { omega_prime, modes })
    }
}

/// Role of a local mode in the matching problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    In,
    Out,
    /// Evanescent, decaying away from the step.
    Decaying,
    /// Evanescent, growing away from the step; never part of a physical solution.
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMode {
    pub vector: PolarizedMode,
    pub label: ModeLabel,
    pub direction: Direction,
}

impl LocalMode {
    fn new(vector: PolarizedMode) -> Result<Self> {
        let root = &vector.root;
        let label = root.label()?;
        let direction = if root.propagating {
            let v = root.comoving_group_velocity.unwrap_or(0.0);
            let incoming = match root.side {
                Side::Left => v > 0.0,
                Side::Right => v < 0.0,
            };
            if incoming {
                Direction::In
            } else {
                Direction::Out
            }
        } else if label.kind == ModeKind::EvanescentDecay {
            Direction::Decaying
        } else {
            Direction::Growing
        };
        Ok(Self {
            vector,
            label,
            direction,
        })
    }

    pub fn root(&self) -> &ModeRoot {
        &self.vector.root
    }

    pub fn side(&self) -> Side {
        self.vector.root.side
    }

    pub fn norm_sign(&self) -> Option<NormSign> {
        self.vector.root.norm_sign
    }

    /// Matching column `±(A, P₁..₃, ∂ζA, ∂ζP₁..₃)`, negated on the left.
    fn column(&self) -> [Complex64; MATCHING_EQUATIONS] {
        let q = self.vector.fields();
        let dq = self.vector.field_derivatives();
        let s = match self.side() {
            Side::Right => 1.0,
            Side::Left => -1.0,
        };
        std::array::from_fn(|i| s * if i < 4 { q[i] } else { dq[i - 4] })
    }
}

/// All sixteen local modes at one ω′, left side first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModeSet {
    pub omega_prime: f64,
    pub modes: Vec<LocalMode>,
}

impl LocalModeSet {
    pub fn with_direction(&self, direction: Direction) -> Vec<&LocalMode> {
        self.modes
            .iter()
            .filter(|m| m.direction == direction)
            .collect()
    }

    pub fn find(&self, label: ModeLabel) -> Result<&LocalMode> {
        self.modes
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| RifError::UnknownLabel(label.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlobalKind {
    In,
    Out,
}

impl fmt::Display for GlobalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GlobalKind::In => "in",
            GlobalKind::Out => "out",
        })
    }
}

impl GlobalKind {
    fn defining(self) -> Direction {
        match self {
            GlobalKind::In => Direction::In,
            GlobalKind::Out => Direction::Out,
        }
    }

    fn unknown(self) -> Direction {
        match self {
            GlobalKind::In => Direction::Out,
            GlobalKind::Out => Direction::In,
        }
    }
}

/// Equilibrated 8×8 continuity system for the coefficients of the unknown local modes.
#[derive(Debug, Clone)]
pub struct MatchingSystem {
    pub omega_prime: f64,
    /// Row- and column-scaled matrix; solve for `y`, then `x = col_scale ⊙ y`.
    pub matrix: DMatrix<Complex64>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    /// Unknown local modes, in column order.
    pub unknowns: Vec<LocalMode>,
    /// 2-norm condition number of the scaled matrix.
    pub condition: f64,
}

impl MatchingSystem {
    fn build(omega_prime: f64, unknowns: Vec<LocalMode>) -> Result<Self> {
        if unknowns.len() != MATCHING_EQUATIONS {
            return Err(RifError::MatchingCount {
                omega_prime,
                equations: MATCHING_EQUATIONS,
                unknowns: unknowns.len(),
            });
        }
        let cols: Vec<[Complex64; MATCHING_EQUATIONS]> =
            unknowns.iter().map(LocalMode::column).collect();
        let n = MATCHING_EQUATIONS;
        let raw = DMatrix::from_fn(n, n, |r, c| cols[c][r]);
        let col_scale: Vec<f64> = (0..n)
            .map(|c| 1.0 / raw.column(c).iter().fold(0.0_f64, |m, z| m.max(z.norm())))
            .collect();
        let mut m = raw;
        for (c, s) in col_scale.iter().enumerate() {
            m.column_mut(c).scale_mut(*s);
        }
        let row_scale: Vec<f64> = (0..n)
            .map(|r| 1.0 / m.row(r).iter().fold(0.0_f64, |a, z| a.max(z.norm())))
            .collect();
        for (r, s) in row_scale.iter().enumerate() {
            m.row_mut(r).scale_mut(*s);
        }
        if row_scale.iter().chain(&col_scale).any(|s| !s.is_finite()) {
            return Err(RifError::SingularSystem {
                omega_prime,
                condition: f64::INFINITY,
            });
        }
        let sv = m.clone().svd(false, false).singular_values;
        let smax = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
        let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        Ok(Self {
            omega_prime,
            matrix: m,
            row_scale,
            col_scale,
            unknowns,
            condition,
        })
    }

    fn scaled_rhs(&self, defining: &LocalMode) -> DVector<Complex64> {
        let c = defining.column();
        DVector::from_fn(MATCHING_EQUATIONS, |r, _| -c[r] * self.row_scale[r])
    }

    fn unscale(&self, y: &DVector<Complex64>) -> Vec<Complex64> {
        y.iter().zip(&self.col_scale).map(|(v, s)| v * s).collect()
    }
}

/// Builds the continuity system for the global mode of `kind` defined by `defining`.
///
/// The unknowns are every propagating local mode of the opposite direction class
/// plus the decaying evanescent modes; `defining` enters with unit coefficient.
pub fn assemble_matching_system(
    scenario: &Scenario,
    omega_prime: f64,
    kind: GlobalKind,
    defining: ModeLabel,
) -> Result<(MatchingSystem, LocalMode)> {
    let set = scenario.local_modes(omega_prime)?;
    let d = *set.find(defining)?;
    if d.direction != kind.defining() {
        return Err(RifError::Classification {
            omega_prime,
            reason: format!("{defining} is not an {kind} mode at this frequency"),
        });
    }
    let sys = system_for(&set, kind)?;
    check_condition(scenario, &sys)?;
    Ok((sys, d))
}

fn system_for(set: &LocalModeSet, kind: GlobalKind) -> Result<MatchingSystem> {
    let unknowns: Vec<LocalMode> = set
        .modes
        .iter()
        .filter(|m| m.direction == kind.unknown() || m.direction == Direction::Decaying)
        .copied()
        .collect();
    MatchingSystem::build(set.omega_prime, unknowns)
}

fn check_condition(scenario: &Scenario, sys: &MatchingSystem) -> Result<()> {
    if !(sys.condition <= scenario.settings.condition_limit) {
        return Err(RifError::SingularSystem {
            omega_prime: sys.omega_prime,
            condition: sys.condition,
        });
    }
    Ok(())
}

/// A matched solution valid on both sides of the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMode {
    pub kind: GlobalKind,
    pub defining_label: ModeLabel,
    pub omega_prime: f64,
    pub left_coefficients: Vec<(ModeLabel, Complex64)>,
    pub right_coefficients: Vec<(ModeLabel, Complex64)>,
    /// Relative mismatch of `(A, Pᵢ, ∂ζA, ∂ζPᵢ)` across ζ = 0.
    pub continuity_residual: f64,
    pub condition: f64,
}

impl GlobalMode {
    pub fn coefficient(&self, label: ModeLabel) -> Complex64 {
        let list = match label.side {
            Side::Left => &self.left_coefficients,
            Side::Right => &self.right_coefficients,
        };
        list.iter()
            .find(|(l, _)| *l == label)
            .map(|(_, c)| *c)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }
}

fn continuity_residual(terms: &[(LocalMode, Complex64)]) -> f64 {
    let mut sum = [Complex64::new(0.0, 0.0); MATCHING_EQUATIONS];
    let mut scale = 0.0_f64;
    for (m, c) in terms {
        for (s, v) in sum.iter_mut().zip(m.column()) {
            let t = v * c;
            *s += t;
            scale = scale.max(t.norm());
        }
    }
    let defect = sum.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if scale == 0.0 {
        0.0
    } else {
        defect / scale
    }
}

fn assemble_global(
    kind: GlobalKind,
    omega_prime: f64,
    defining: &LocalMode,
    sys: &MatchingSystem,
    x: &[Complex64],
) -> GlobalMode {
    let mut terms: Vec<(LocalMode, Complex64)> = vec![(*defining, Complex64::new(1.0, 0.0))];
    terms.extend(sys.unknowns.iter().copied().zip(x.iter().copied()));
    let residual = continuity_residual(&terms);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (m, c) in terms {
        match m.side() {
            Side::Left => left.push((m.label, c)),
            Side::Right => right.push((m.label, c)),
        }
    }
    GlobalMode {
        kind,
        defining_label: defining.label,
        omega_prime,
        left_coefficients: left,
        right_coefficients: right,
        continuity_residual: residual,
        condition: sys.condition,
    }
}

/// Global in- or out-mode at `omega_prime` seeded by the local mode `defining`.
pub fn global_mode(
    scenario: &Scenario,
    kind: GlobalKind,
    defining: ModeLabel,
    omega_prime: f64,
) -> Result<GlobalMode> {
    let (sys, d) = assemble_matching_system(scenario, omega_prime, kind, defining)?;
    let lu = sys.matrix.clone().full_piv_lu();
    let y = lu.solve(&sys.scaled_rhs(&d)).ok_or(RifError::SingularSystem {
        omega_prime,
        condition: sys.condition,
    })?;
    let x = sys.unscale(&y);
    Ok(assemble_global(kind, omega_prime, &d, &sys, &x))
}

/// In→out transformation at one ω′.
///
/// `entries[(α, β)]` is the coefficient of out-mode β in the global in-mode α.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub omega_prime: f64,
    pub in_modes: Vec<ModeRoot>,
    pub out_modes: Vec<ModeRoot>,
    pub in_labels: Vec<ModeLabel>,
    pub out_labels: Vec<ModeLabel>,
    pub entries: DMatrix<Complex64>,
    pub in_metric: Vec<f64>,
    pub out_metric: Vec<f64>,
    pub condition: f64,
    pub unitarity_residual: f64,
    /// Largest continuity residual over the assembled in-modes.
    pub continuity_residual: f64,
    pub configuration: ConfigurationResult,
}

impl ScatteringMatrix {
    pub fn dim(&self) -> usize {
        self.in_labels.len()
    }

    pub fn out_index(&self, label: ModeLabel) -> Option<usize> {
        self.out_labels.iter().position(|l| *l == label)
    }

    pub fn in_index(&self, label: ModeLabel) -> Option<usize> {
        self.in_labels.iter().position(|l| *l == label)
    }

    pub fn entry(&self, input: ModeLabel, output: ModeLabel) -> Option<Complex64> {
        Some(self.entries[(self.in_index(input)?, self.out_index(output)?)])
    }

    /// Row and column forms of pseudo-unitarity,
    /// `max(|S·η_out·S† − η_in|, |S†·η_in·S − η_out|)`.
    pub fn pseudo_unitarity_residual(&self) -> f64 {
        pseudo_unitarity(&self.entries, &self.in_metric, &self.out_metric)
    }

    /// `η_out·S†·η_in`, the inverse implied by pseudo-unitarity.
    pub fn metric_inverse(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |b, a| {
            self.out_metric[b] * self.entries[(a, b)].conj() * self.in_metric[a]
        })
    }

    /// Spontaneous flux density into every out-mode, in out-label order.
    pub fn fluxes(&self) -> Vec<f64> {
        (0..self.dim()).map(|b| self.flux_at(b)).collect()
    }

    fn flux_at(&self, b: usize) -> f64 {
        let sign = self.out_metric[b];
        (0..self.dim())
            .filter(|&a| self.in_metric[a] != sign)
            .map(|a| self.entries[(a, b)].norm_sqr())
            .sum()
    }
}

fn pseudo_unitarity(s: &DMatrix<Complex64>, eta_in: &[f64], eta_out: &[f64]) -> f64 {
    let n = s.nrows();
    let diag = |v: &[f64]| DMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { v[i] } else { 0.0 }, 0.0));
    let ei = diag(eta_in);
    let eo = diag(eta_out);
    let sh = s.adjoint();
    let a = s * &eo * &sh - &ei;
    let b = &sh * &ei * s - &eo;
    a.iter().chain(b.iter()).fold(0.0_f64, |m, z| m.max(z.norm()))
}

fn metric_of(m: &LocalMode) -> f64 {
    m.norm_sign().map(NormSign::value).unwrap_or(0.0)
}

/// Scattering matrix at `omega_prime`, verified against pseudo-unitarity.
pub fn s_matrix(scenario: &Scenario, omega_prime: f64) -> Result<ScatteringMatrix> {
    let set = scenario.local_modes(omega_prime)?;
    let ins: Vec<LocalMode> = set.with_direction(Direction::In).into_iter().copied().collect();
    let sys = system_for(&set, GlobalKind::In)?;
    check_condition(scenario, &sys)?;
    let outs: Vec<(usize, LocalMode)> = sys
        .unknowns
        .iter()
        .enumerate()
        .filter(|(_, m)| m.direction == Direction::Out)
        .map(|(i, m)| (i, *m))
        .collect();
    if ins.len() != outs.len() {
        return Err(RifError::MatchingCount {
            omega_prime,
            equations: ins.len(),
            unknowns: outs.len(),
        });
    }
    let lu = sys.matrix.clone().full_piv_lu();
    let n = ins.len();
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    let mut continuity = 0.0_f64;
    for (a, m) in ins.iter().enumerate() {
        let y = lu.solve(&sys.scaled_rhs(m)).ok_or(RifError::SingularSystem {
            omega_prime,
            condition: sys.condition,
        })?;
        let x = sys.unscale(&y);
        let g = assemble_global(GlobalKind::In, omega_prime, m, &sys, &x);
        continuity = continuity.max(g.continuity_residual);
        for (b, (i, _)) in outs.iter().enumerate() {
            entries[(a, b)] = x[*i];
        }
    }
    let in_metric: Vec<f64> = ins.iter().map(metric_of).collect();
    let out_metric: Vec<f64> = outs.iter().map(|(_, m)| metric_of(m)).collect();
    let residual = pseudo_unitarity(&entries, &in_metric, &out_metric);
    if !(residual <= scenario.settings.unitarity_tolerance) {
        return Err(RifError::PseudoUnitarity {
            omega_prime,
            residual,
        });
    }
    Ok(ScatteringMatrix {
        omega_prime,
        in_modes: ins.iter().map(|m| m.vector.root).collect(),
        out_modes: outs.iter().map(|(_, m)| m.vector.root).collect(),
        in_labels: ins.iter().map(|m| m.label).collect(),
        out_labels: outs.iter().map(|(_, m)| m.label).collect(),
        entries,
        in_metric,
        out_metric,
        condition: sys.condition,
        unitarity_residual: residual,
        continuity_residual: continuity,
        configuration: scenario.configuration(omega_prime),
    })
}

/// Matrix of in-mode coefficients of each global out-mode; rows follow
/// `s.out_labels`, columns `s.in_labels`. Equals `S⁻¹`.
pub fn out_basis_decomposition(scenario: &Scenario, s: &ScatteringMatrix) -> Result<DMatrix<Complex64>> {
    let omega_prime = s.omega_prime;
    let set = scenario.local_modes(omega_prime)?;
    let sys = system_for(&set, GlobalKind::Out)?;
    check_condition(scenario, &sys)?;
    let lu = sys.matrix.clone().full_piv_lu();
    let n = s.dim();
    let mut t = DMatrix::<Complex64>::zeros(n, n);
    for (b, label) in s.out_labels.iter().enumerate() {
        let m = set.find(*label)?;
        let y = lu.solve(&sys.scaled_rhs(m)).ok_or(RifError::SingularSystem {
            omega_prime,
            condition: sys.condition,
        })?;
        let x = sys.unscale(&y);
        for (a, in_label) in s.in_labels.iter().enumerate() {
            let i = sys
                .unknowns
                .iter()
                .position(|u| u.label == *in_label)
                .ok_or_else(|| RifError::UnknownLabel(in_label.to_string()))?;
            t[(b, a)] = x[i];
        }
    }
    Ok(t)
}

/// `I′^α = Σ_{ᾱ of opposite norm} |S^{ᾱα}|²` for out-mode `alpha`.
pub fn flux_density(s: &ScatteringMatrix, alpha: ModeLabel) -> Result<f64> {
    let b = s
        .out_index(alpha)
        .ok_or_else(|| RifError::UnknownLabel(alpha.to_string()))?;
    Ok(s.flux_at(b))
}

/// Photons per unit comoving time emitted into a band of flux density `flux`
/// of width `d_omega_prime`, `flux·dω′/(2π)`.
pub fn photon_rate(flux: f64, d_omega_prime: f64) -> f64 {
    flux * d_omega_prime / (2.0 * PI)
}
