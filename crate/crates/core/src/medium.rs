//! Homogeneous Sellmeier dielectrics, the index step, and the comoving frame.
//!
//! A medium is described by three polarization resonances. With `c = 1` and
//! lengths in µm, the permittivity is
//!
//! ```text
//! n²(ω) = ε(ω) = 1 + Σᵢ Bᵢ / Dᵢ(ω),   Bᵢ = 4πκᵢ,   Dᵢ(ω) = 1 − ω²/ωᵢ²,   ωᵢ = 2π/λᵢ
//! ```
//!
//! Complex-valued evaluations work on the cleared form `k²·ΠDᵢ − ω²·ε·ΠDᵢ`,
//! which is polynomial in ω and has no poles.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RifError};

/// Default relative half-width of the excluded band around each resonance.
pub const DEFAULT_GUARD_BAND: f64 = 1e-3;

/// Fused silica resonance wavelengths in µm (IR, UV, far UV).
pub const FUSED_SILICA_WAVELENGTHS_UM: [f64; 3] = [9.904, 0.116, 0.0685];
/// Fused silica elastic constants κᵢ, paired with [`FUSED_SILICA_WAVELENGTHS_UM`].
pub const FUSED_SILICA_ELASTIC: [f64; 3] = [0.07142, 0.03246, 0.05540];

/// A side of the index step. `Left` is ζ < 0 (the raised-index region behind the front).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn suffix(self) -> char {
        match self {
            Side::Left => 'L',
            Side::Right => 'R',
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.suffix())
    }
}

/// Three-resonance Sellmeier dielectric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellmeierMedium {
    /// λᵢ in µm, strictly decreasing.
    resonance_wavelengths: [f64; 3],
    /// κᵢ, dimensionless.
    elastic_constants: [f64; 3],
    guard_band: f64,
}

impl SellmeierMedium {
    /// Builds a medium from resonance wavelengths (µm) and elastic constants.
    ///
    /// Elastic constants may be zero (the vacuum limit) but not negative.
    pub fn new(resonance_wavelengths_um: [f64; 3], elastic_constants: [f64; 3]) -> Result<Self> {
        for (i, &l) in resonance_wavelengths_um.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(RifError::invalid(
                    format!("medium.resonance_wavelengths[{i}]"),
                    format!("must be finite and positive, got {l}"),
                ));
            }
        }
        if !(resonance_wavelengths_um[0] > resonance_wavelengths_um[1]
            && resonance_wavelengths_um[1] > resonance_wavelengths_um[2])
        {
            return Err(RifError::invalid(
                "medium.resonance_wavelengths",
                "must be strictly decreasing",
            ));
        }
        for (i, &k) in elastic_constants.iter().enumerate() {
            if !(k.is_finite() && k >= 0.0) {
                return Err(RifError::invalid(
                    format!("medium.elastic_constants[{i}]"),
                    format!("must be finite and non-negative, got {k}"),
                ));
            }
        }
        Ok(Self {
            resonance_wavelengths: resonance_wavelengths_um,
            elastic_constants,
            guard_band: DEFAULT_GUARD_BAND,
        })
    }

    /// Bulk fused silica.
    pub fn fused_silica() -> Self {
        Self::new(FUSED_SILICA_WAVELENGTHS_UM, FUSED_SILICA_ELASTIC)
            .expect("built-in constants are valid")
    }

    /// Silica resonances with all couplings switched off; `n = 1` everywhere.
    pub fn vacuum() -> Self {
        Self::new(FUSED_SILICA_WAVELENGTHS_UM, [0.0; 3]).expect("built-in constants are valid")
    }

    pub fn with_guard_band(mut self, guard_band: f64) -> Result<Self> {
        if !(guard_band.is_finite() && (0.0..0.5).contains(&guard_band)) {
            return Err(RifError::invalid(
                "medium.guard_band",
                format!("must lie in [0, 0.5), got {guard_band}"),
            ));
        }
        self.guard_band = guard_band;
        Ok(self)
    }

    pub fn resonance_wavelengths(&self) -> [f64; 3] {
        self.resonance_wavelengths
    }

    pub fn elastic_constants(&self) -> [f64; 3] {
        self.elastic_constants
    }

    pub fn guard_band(&self) -> f64 {
        self.guard_band
    }

    /// ωᵢ = 2π/λᵢ, ascending.
    pub fn resonance_frequencies(&self) -> [f64; 3] {
        self.resonance_wavelengths.map(|l| 2.0 * PI / l)
    }

    /// Bᵢ = 4πκᵢ.
    pub fn oscillator_strengths(&self) -> [f64; 3] {
        self.elastic_constants.map(|k| 4.0 * PI * k)
    }

    /// n(0) = sqrt(1 + ΣBᵢ).
    pub fn static_index(&self) -> f64 {
        (1.0 + self.oscillator_strengths().iter().sum::<f64>()).sqrt()
    }

    /// Dᵢ(ω) = 1 − ω²/ωᵢ².
    pub fn denominators(&self, omega: Complex64) -> [Complex64; 3] {
        let w2 = omega * omega;
        self.resonance_frequencies()
            .map(|wr| Complex64::new(1.0, 0.0) - w2 / (wr * wr))
    }

    /// ε(ω) = n²(ω). Undefined exactly on a resonance.
    pub fn permittivity(&self, omega: Complex64) -> Complex64 {
        let d = self.denominators(omega);
        let b = self.oscillator_strengths();
        Complex64::new(1.0, 0.0) + (0..3).map(|i| b[i] / d[i]).sum::<Complex64>()
    }

    /// dε/dω.
    pub fn permittivity_derivative(&self, omega: Complex64) -> Complex64 {
        let d = self.denominators(omega);
        let b = self.oscillator_strengths();
        let wr = self.resonance_frequencies();
        (0..3)
            .map(|i| b[i] * 2.0 * omega / (wr[i] * wr[i] * d[i] * d[i]))
            .sum()
    }

    /// Rejects real frequencies inside the guard band of any resonance.
    pub fn check_guard(&self, omega: f64) -> Result<()> {
        for wr in self.resonance_frequencies() {
            if (omega.abs() - wr).abs() <= self.guard_band * wr {
                return Err(RifError::ResonanceProximity {
                    omega,
                    resonance: wr,
                });
            }
        }
        Ok(())
    }

    /// n(ω), even in ω.
    pub fn refractive_index(&self, omega: f64) -> Result<f64> {
        self.check_guard(omega)?;
        let eps = self.permittivity(Complex64::new(omega, 0.0)).re;
        if eps < 0.0 {
            return Err(RifError::AnomalousBand {
                omega,
                epsilon: eps,
            });
        }
        Ok(eps.sqrt())
    }

    /// Cleared dispersion function `F(ω, k) = k²·P(ω) − ω²·Q(ω)` with
    /// `P = ΠDᵢ` and `Q = ε·P`, together with `∂F/∂ω` and `∂F/∂k`.
    pub fn cleared_dispersion(&self, omega: Complex64, k: Complex64) -> ClearedDispersion {
        let d = self.denominators(omega);
        let b = self.oscillator_strengths();
        let wr = self.resonance_frequencies();
        let dd: [Complex64; 3] = std::array::from_fn(|i| -2.0 * omega / (wr[i] * wr[i]));

        let p = d[0] * d[1] * d[2];
        let dp = dd[0] * d[1] * d[2] + d[0] * dd[1] * d[2] + d[0] * d[1] * dd[2];
        // Σ Bᵢ Π_{j≠i} Dⱼ and its derivative
        let pairs = [(1, 2), (0, 2), (0, 1)];
        let mut s = Complex64::new(0.0, 0.0);
        let mut ds = Complex64::new(0.0, 0.0);
        for (i, &(j, l)) in pairs.iter().enumerate() {
            s += b[i] * d[j] * d[l];
            ds += b[i] * (dd[j] * d[l] + d[j] * dd[l]);
        }
        let q = p + s;
        let dq = dp + ds;
        let w2 = omega * omega;
        let k_term = k * k * p;
        let w_term = w2 * q;
        ClearedDispersion {
            value: k_term - w_term,
            d_omega: k * k * dp - 2.0 * omega * q - w2 * dq,
            d_k: 2.0 * k * p,
            scale: k_term.norm().max(w_term.norm()),
        }
    }

    /// Normalized defect `(k² − ω²n²) / max(|k²|, |ω²n²|)` evaluated in cleared form.
    ///
    /// Zero exactly when `(ω, k)` lies on a dispersion branch; magnitude 1 for `k = 0`.
    pub fn dispersion_residual(&self, omega: Complex64, k: Complex64) -> Complex64 {
        let f = self.cleared_dispersion(omega, k);
        if f.scale == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            f.value / f.scale
        }
    }

    /// Lab group velocity `dω/dk` at an arbitrary (possibly complex) on-branch point.
    pub fn group_velocity_at(&self, omega: Complex64, k: Complex64) -> Complex64 {
        let eps = self.permittivity(omega);
        let deps = self.permittivity_derivative(omega);
        2.0 * k / (2.0 * omega * eps + omega * omega * deps)
    }

    /// Lab group velocity on the branch `k = n(ω)ω`, from the closed-form `dk/dω`.
    pub fn group_velocity(&self, omega: f64) -> Result<f64> {
        let n = self.refractive_index(omega)?;
        if n == 0.0 {
            return Err(RifError::NotPropagating { omega });
        }
        let w = Complex64::new(omega, 0.0);
        let eps = n * n;
        let deps = self.permittivity_derivative(w).re;
        // dk/dω = (2ε + ω ε') / (2n)
        Ok(2.0 * n / (2.0 * eps + omega * deps))
    }
}

/// Cleared dispersion function and partial derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct ClearedDispersion {
    pub value: Complex64,
    pub d_omega: Complex64,
    pub d_k: Complex64,
    /// max(|k²P|, |ω²Q|), the natural magnitude of the two cancelling terms.
    pub scale: f64,
}

/// Right/left media pair across the front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexStep {
    right: SellmeierMedium,
    left: SellmeierMedium,
    delta_n: f64,
    sigma: f64,
    n_ref_right: f64,
}

impl IndexStep {
    /// Step of height `delta_n` using the static-limit reference index of `right`.
    pub fn new(right: SellmeierMedium, delta_n: f64) -> Result<Self> {
        scale_medium(right, delta_n, right.static_index())
    }

    pub fn right(&self) -> &SellmeierMedium {
        &self.right
    }

    pub fn left(&self) -> &SellmeierMedium {
        &self.left
    }

    pub fn medium(&self, side: Side) -> &SellmeierMedium {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn delta_n(&self) -> f64 {
        self.delta_n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_ref_right(&self) -> f64 {
        self.n_ref_right
    }
}

/// Builds the left medium by scaling κᵢ → σκᵢ and λᵢ² → σλᵢ², with
/// `σ = 1 + 2·n_ref·δn / (n_ref² − 1)`.
///
/// The scaling leaves every oscillator inertia `1/(κᵢωᵢ²)` unchanged.
pub fn scale_medium(right: SellmeierMedium, delta_n: f64, n_ref: f64) -> Result<IndexStep> {
    if !(delta_n.is_finite() && delta_n >= 0.0) {
        return Err(RifError::invalid(
            "step.delta_n",
            format!("must be finite and non-negative, got {delta_n}"),
        ));
    }
    let trivial = delta_n == 0.0 && n_ref == 1.0;
    if !(n_ref.is_finite() && (n_ref > 1.0 || trivial)) {
        return Err(RifError::invalid(
            "step.n_ref",
            format!("must be finite and > 1, got {n_ref}"),
        ));
    }
    let sigma = if trivial {
        1.0
    } else {
        1.0 + 2.0 * n_ref * delta_n / (n_ref * n_ref - 1.0)
    };
    let root = sigma.sqrt();
    let left = SellmeierMedium {
        resonance_wavelengths: right.resonance_wavelengths.map(|l| l * root),
        elastic_constants: right.elastic_constants.map(|k| k * sigma),
        guard_band: right.guard_band,
    };
    Ok(IndexStep {
        right,
        left,
        delta_n,
        sigma,
        n_ref_right: n_ref,
    })
}

/// Frame comoving with the front at speed `u` (fraction of c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontFrame {
    u: f64,
    gamma: f64,
}

impl FrontFrame {
    pub fn new(u: f64) -> Result<Self> {
        if !(u.is_finite() && u > 0.0 && u < 1.0) {
            return Err(RifError::invalid(
                "front.u",
                format!("must lie in (0, 1), got {u}"),
            ));
        }
        Ok(Self {
            u,
            gamma: 1.0 / (1.0 - u * u).sqrt(),
        })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// ω′ = γ(ω − uk), k′ = γ(k − uω).
    pub fn to_comoving(&self, wave: LabWave) -> ComovingWave {
        ComovingWave {
            omega: self.gamma * (wave.omega - self.u * wave.k),
            k: self.gamma * (wave.k - self.u * wave.omega),
        }
    }

    /// ω = γ(ω′ + uk′), k = γ(k′ + uω′).
    pub fn to_lab(&self, wave: ComovingWave) -> LabWave {
        LabWave {
            omega: self.gamma * (wave.omega + self.u * wave.k),
            k: self.gamma * (wave.k + self.u * wave.omega),
        }
    }

    /// Comoving group velocity `dω′/dk′` from the lab one.
    pub fn comoving_velocity(&self, lab_velocity: f64) -> f64 {
        (lab_velocity - self.u) / (1.0 - self.u * lab_velocity)
    }

    /// Complex variant of [`FrontFrame::comoving_velocity`].
    pub fn comoving_velocity_complex(&self, lab_velocity: Complex64) -> Complex64 {
        (lab_velocity - self.u) / (1.0 - self.u * lab_velocity)
    }
}

/// Plane wave in the laboratory frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabWave {
    pub omega: Complex64,
    pub k: Complex64,
}

/// Plane wave in the comoving frame (ω′, k′).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComovingWave {
    pub omega: Complex64,
    pub k: Complex64,
}

pub fn boost_to_comoving(wave: LabWave, frame: &FrontFrame) -> ComovingWave {
    frame.to_comoving(wave)
}

pub fn boost_to_lab(wave: ComovingWave, frame: &FrontFrame) -> LabWave {
    frame.to_lab(wave)
}
