//! Plane-wave eigenvectors of the coupled light–polarization system in the comoving frame.
//!
//! A mode is the eight-vector `V = (A, P₁, P₂, P₃, Π_A, Π_P₁, Π_P₂, Π_P₃)` multiplying
//! `exp(i(k′ζ − ω′τ))`. In the gauge `A = 1` the components are
//!
//! ```text
//! Pᵢ = iωκᵢ/Dᵢ(ω),   Π_A = −iω′/(4π),   Π_Pᵢ = γ/Dᵢ(ω)
//! ```
//!
//! with ω the lab frequency of the root. The conserved scalar-product density is
//! `ρ = i·V†ηV` (ħ = 1) and the matching flux density is
//! `j = −i[(A₁*A₂′ − A₁′*A₂)/(4π) + u·Σ(P₁ᵢ*Π_P₂ᵢ − Π_P₁ᵢ*P₂ᵢ)]`, which satisfy
//! `∂τρ + ∂ζj = 0`. For a single propagating mode `j = v′_g·ρ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RifError};
use crate::medium::{FrontFrame, SellmeierMedium};
use crate::modes::ModeRoot;

pub const MODE_DIM: usize = 8;

/// Comoving group velocities below this magnitude make a mode unnormalizable.
pub const MIN_GROUP_VELOCITY: f64 = 1e-12;

/// Two comoving frequencies closer than this (relative) count as equal.
const FREQUENCY_MATCH: f64 = 1e-12;

/// The selection matrix `η = [[0, I₄], [−I₄, 0]]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormMetric;

impl NormMetric {
    pub fn matrix(&self) -> [[f64; MODE_DIM]; MODE_DIM] {
        let mut m = [[0.0; MODE_DIM]; MODE_DIM];
        for i in 0..4 {
            m[i][i + 4] = 1.0;
            m[i + 4][i] = -1.0;
        }
        m
    }

    /// `a†ηb`.
    pub fn pairing(&self, a: &[Complex64; MODE_DIM], b: &[Complex64; MODE_DIM]) -> Complex64 {
        (0..4)
            .map(|i| a[i].conj() * b[i + 4] - a[i + 4].conj() * b[i])
            .sum()
    }
}

/// A local mode together with its eight-component amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizedMode {
    pub root: ModeRoot,
    pub amplitude: [Complex64; MODE_DIM],
    /// `i·V†ηV`, real by antisymmetry of η.
    pub norm_density: f64,
    pub normalized: bool,
}

impl PolarizedMode {
    pub fn omega_prime(&self) -> f64 {
        self.root.omega_prime()
    }

    pub fn k_prime(&self) -> Complex64 {
        self.root.comoving.k
    }

    /// Field part `(A, P₁, P₂, P₃)`.
    pub fn fields(&self) -> [Complex64; 4] {
        [
            self.amplitude[0],
            self.amplitude[1],
            self.amplitude[2],
            self.amplitude[3],
        ]
    }

    /// Momentum part `(Π_A, Π_P₁, Π_P₂, Π_P₃)`.
    pub fn momenta(&self) -> [Complex64; 4] {
        [
            self.amplitude[4],
            self.amplitude[5],
            self.amplitude[6],
            self.amplitude[7],
        ]
    }

    /// `∂ζ` of the field part, `ik′·(A, P)`.
    pub fn field_derivatives(&self) -> [Complex64; 4] {
        let ik = Complex64::i() * self.k_prime();
        self.fields().map(|q| ik * q)
    }

    fn with_amplitude(&self, amplitude: [Complex64; MODE_DIM]) -> Self {
        let norm_density = density(&amplitude);
        Self {
            amplitude,
            norm_density,
            ..*self
        }
    }
}

fn density(v: &[Complex64; MODE_DIM]) -> f64 {
    (Complex64::i() * NormMetric.pairing(v, v)).re
}

/// Unnormalized eigenvector of `root` in `medium`, gauge `A = 1`.
pub fn polarization_vector(
    medium: &SellmeierMedium,
    root: &ModeRoot,
    frame: &FrontFrame,
) -> Result<PolarizedMode> {
    let w = root.lab.omega;
    if root.propagating {
        medium.check_guard(w.re)?;
    }
    let d = medium.denominators(w);
    let kappa = medium.elastic_constants();
    if let Some(i) = (0..3).find(|&i| d[i].norm() == 0.0) {
        return Err(RifError::ResonanceProximity {
            omega: w.re,
            resonance: medium.resonance_frequencies()[i],
        });
    }
    let g = frame.gamma();
    let wp = root.omega_prime();
    let i = Complex64::i();
    let mut v = [Complex64::new(0.0, 0.0); MODE_DIM];
    v[0] = Complex64::new(1.0, 0.0);
    for n in 0..3 {
        v[1 + n] = i * w * kappa[n] / d[n];
        v[5 + n] = g / d[n];
    }
    v[4] = -i * wp / (4.0 * PI);
    Ok(PolarizedMode {
        root: *root,
        amplitude: v,
        norm_density: density(&v),
        normalized: false,
    })
}

/// Scalar-product density `i·a†ηb` per unit length (ħ = 1).
pub fn scalar_product_density(a: &PolarizedMode, b: &PolarizedMode) -> Result<Complex64> {
    check_same_frequency(a, b)?;
    Ok(Complex64::i() * NormMetric.pairing(&a.amplitude, &b.amplitude))
}

/// Flux density `j(a, b)` conjugate to the scalar-product density.
///
/// It is continuous across the step for matched global modes, vanishes for two
/// distinct propagating modes at the same ω′, and equals `v′_g·ρ` for `a = b`.
pub fn norm_current(a: &PolarizedMode, b: &PolarizedMode, frame: &FrontFrame) -> Result<Complex64> {
    check_same_frequency(a, b)?;
    let qa = a.fields();
    let qb = b.fields();
    let pa = a.momenta();
    let pb = b.momenta();
    let da = a.field_derivatives();
    let db = b.field_derivatives();
    let em = (qa[0].conj() * db[0] - da[0].conj() * qb[0]) / (4.0 * PI);
    let pol: Complex64 = (1..4)
        .map(|n| qa[n].conj() * pb[n] - pa[n].conj() * qb[n])
        .sum();
    Ok(-Complex64::i() * (em + frame.u() * pol))
}

fn check_same_frequency(a: &PolarizedMode, b: &PolarizedMode) -> Result<()> {
    let (x, y) = (a.omega_prime(), b.omega_prime());
    if (x - y).abs() > FREQUENCY_MATCH * x.abs().max(y.abs()) {
        return Err(RifError::MismatchedFrequency { a: x, b: y });
    }
    Ok(())
}

/// Scales a propagating mode to unit norm per unit comoving frequency.
///
/// The amplitude factor is `1/sqrt(2π·|ρ|·|v′_g|)`, so `2π·|ρ|·|v′_g| = 1` afterwards.
/// The phase is fixed so that `A` is real and positive.
pub fn normalize(mode: &PolarizedMode) -> Result<PolarizedMode> {
    if !mode.root.propagating {
        return Err(RifError::NotPropagating {
            omega: mode.root.lab.omega.re,
        });
    }
    let vg = mode
        .root
        .comoving_group_velocity
        .ok_or(RifError::NotPropagating {
            omega: mode.root.lab.omega.re,
        })?;
    if vg.abs() < MIN_GROUP_VELOCITY || !vg.is_finite() {
        return Err(RifError::SingularNormalization { group_velocity: vg });
    }
    let rho = mode.norm_density.abs();
    if rho == 0.0 || !rho.is_finite() {
        return Err(RifError::SingularNormalization { group_velocity: vg });
    }
    let a = mode.amplitude[0];
    let phase = if a.norm() > 0.0 {
        a.conj() / a.norm()
    } else {
        let first = mode
            .amplitude
            .iter()
            .find(|c| c.norm() > 0.0)
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        first.conj() / first.norm()
    };
    let factor = phase / (2.0 * PI * rho * vg.abs()).sqrt();
    let mut out = mode.with_amplitude(mode.amplitude.map(|c| c * factor));
    out.amplitude[0] = Complex64::new(out.amplitude[0].norm(), 0.0);
    out.norm_density = density(&out.amplitude);
    out.normalized = true;
    Ok(out)
}

/// Builds and normalizes a propagating mode, or returns the raw eigenvector of an evanescent one.
pub fn mode_vector(
    medium: &SellmeierMedium,
    root: &ModeRoot,
    frame: &FrontFrame,
) -> Result<PolarizedMode> {
    let raw = polarization_vector(medium, root, frame)?;
    if root.propagating {
        normalize(&raw)
    } else {
        Ok(raw)
    }
}

/// Largest relative defect of `mode` in the comoving Hamilton equations
///
/// ```text
/// −iω′A    = 4πΠ_A
/// −iω′Pᵢ   = κᵢωᵢ²(Π_Pᵢ − γA)/γ² + iuk′Pᵢ
/// −iω′Π_A  = −k′²A/(4π) + Σ κᵢωᵢ²(Π_Pᵢ − γA)/γ
/// −iω′κᵢΠ_Pᵢ = −Pᵢ + iuk′κᵢΠ_Pᵢ
/// ```
///
/// The last line is multiplied through by κᵢ so the vacuum limit stays finite.
pub fn equation_residual(medium: &SellmeierMedium, mode: &PolarizedMode, frame: &FrontFrame) -> f64 {
    let i = Complex64::i();
    let g = frame.gamma();
    let u = frame.u();
    let wp = Complex64::new(mode.omega_prime(), 0.0);
    let k = mode.k_prime();
    let kappa = medium.elastic_constants();
    let wr = medium.resonance_frequencies();
    let v = &mode.amplitude;
    let a = v[0];
    let mut pairs: Vec<(Complex64, Complex64)> = Vec::with_capacity(MODE_DIM);
    pairs.push((-i * wp * a, 4.0 * PI * v[4]));
    let mut coupling = Complex64::new(0.0, 0.0);
    for n in 0..3 {
        let s = kappa[n] * wr[n] * wr[n];
        let drive = s * (v[5 + n] - g * a);
        coupling += drive / g;
        pairs.push((-i * wp * v[1 + n], drive / (g * g) + i * u * k * v[1 + n]));
        pairs.push((
            -i * wp * kappa[n] * v[5 + n],
            -v[1 + n] + i * u * k * kappa[n] * v[5 + n],
        ));
    }
    pairs.push((-i * wp * v[4], -k * k * a / (4.0 * PI) + coupling));
    let scale = pairs
        .iter()
        .fold(0.0_f64, |m, (l, r)| m.max(l.norm()).max(r.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    pairs
        .iter()
        .map(|(l, r)| (l - r).norm())
        .fold(0.0_f64, f64::max)
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{IndexStep, Side};
    use crate::modes::{find_sli, labelled_modes, solve_modes, ModeSettings, NormSign};
    use nalgebra::{DMatrix, DVector};

    fn frame() -> FrontFrame {
        FrontFrame::new(0.66).unwrap()
    }

    fn roots(m: &SellmeierMedium, wp: f64) -> Vec<ModeRoot> {
        solve_modes(m, wp, &frame(), Side::Right, &ModeSettings::default()).unwrap()
    }

    fn grid() -> Vec<f64> {
        (1..40).map(|i| 0.02 * i as f64).collect()
    }

    /// Lab Lagrangian density composed with the boost, as a function of the
    /// real 12-vector `(A, P₁..₃, ∂τA, ∂τP₁..₃, ∂ζA, ∂ζP₁..₃)`, with c = 1.
    fn boosted_lagrangian(m: &SellmeierMedium, f: &FrontFrame, z: &[f64; 12]) -> f64 {
        let (g, u) = (f.gamma(), f.u());
        let kappa = m.elastic_constants();
        let lam = m.resonance_wavelengths();
        let dt = |j: usize| g * (z[4 + j] - u * z[8 + j]);
        let dx = |j: usize| g * (z[8 + j] - u * z[4 + j]);
        let mut l = dt(0).powi(2) / (8.0 * PI) - dx(0).powi(2) / (8.0 * PI);
        for n in 0..3 {
            let inertia = lam[n] * lam[n] / (kappa[n] * (2.0 * PI).powi(2));
            l += 0.5 * inertia * dt(1 + n).powi(2) - z[1 + n].powi(2) / (2.0 * kappa[n])
                + z[0] * dt(1 + n);
        }
        l
    }

    /// Hessian of the quadratic Lagrangian by second central differences,
    /// exact for quadratics up to rounding.
    fn lagrangian_hessian(m: &SellmeierMedium, f: &FrontFrame) -> DMatrix<f64> {
        let l = |z: [f64; 12]| boosted_lagrangian(m, f, &z);
        let unit = |a: usize, s: f64| {
            let mut z = [0.0; 12];
            z[a] = s;
            z
        };
        let add = |x: [f64; 12], y: [f64; 12]| std::array::from_fn::<f64, 12, _>(|i| x[i] + y[i]);
        DMatrix::from_fn(12, 12, |a, b| {
            (l(add(unit(a, 1.0), unit(b, 1.0))) - l(add(unit(a, 1.0), unit(b, -1.0)))
                - l(add(unit(a, -1.0), unit(b, 1.0)))
                + l(add(unit(a, -1.0), unit(b, -1.0))))
                / 4.0
        })
    }

    /// Euler–Lagrange defect and canonical momenta of a plane wave `y·e^{i(k′ζ−ω′τ)}`.
    fn lagrangian_oracle(
        h: &DMatrix<f64>,
        wp: f64,
        k: Complex64,
        y: [Complex64; 4],
    ) -> (f64, [Complex64; 4]) {
        let i = Complex64::i();
        let mut z = DVector::<Complex64>::zeros(12);
        for j in 0..4 {
            z[j] = y[j];
            z[4 + j] = -i * wp * y[j];
            z[8 + j] = i * k * y[j];
        }
        let hc = h.map(|x| Complex64::new(x, 0.0));
        let grad = hc * z;
        let mut defect = 0.0_f64;
        let mut scale = 0.0_f64;
        let mut momenta = [Complex64::new(0.0, 0.0); 4];
        for j in 0..4 {
            let pi = grad[4 + j];
            momenta[j] = pi;
            let terms = [-i * wp * pi, i * k * grad[8 + j], -grad[j]];
            let e: Complex64 = terms.iter().sum();
            defect = defect.max(e.norm());
            scale = terms.iter().fold(scale, |s, t| s.max(t.norm()));
        }
        (defect / scale, momenta)
    }

    #[test]
    fn eigenvector_satisfies_boosted_euler_lagrange_equations() {
        let f = frame();
        let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.02).unwrap();
        for m in [step.right(), step.left()] {
            let h = lagrangian_hessian(m, &f);
            for wp in grid() {
                for r in roots(m, wp) {
                    let v = polarization_vector(m, &r, &f).unwrap();
                    let (defect, momenta) =
                        lagrangian_oracle(&h, wp, r.comoving.k, v.fields());
                    assert!(defect <= 1e-10, "EL defect {defect:e} at ω' = {wp}, ω = {}", r.lab.omega);
                    for j in 0..4 {
                        let want = momenta[j];
                        let got = v.momenta()[j];
                        assert!(
                            (got - want).norm() <= 1e-10 * want.norm().max(v.amplitude[0].norm()),
                            "momentum {j}: {got} vs {want}"
                        );
                    }
                    assert!(equation_residual(m, &v, &f) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn vacuum_polarization_vanishes() {
        let m = SellmeierMedium::vacuum();
        let f = frame();
        // the cleared polynomial also vanishes at ±ωᵢ, which carry no field
        let light: Vec<_> = roots(&m, 0.3)
            .into_iter()
            .filter(|r| m.check_guard(r.lab.omega.re).is_ok())
            .collect();
        assert_eq!(light.len(), 2);
        for r in light {
            let v = polarization_vector(&m, &r, &f).unwrap();
            for n in 1..4 {
                assert_eq!(v.amplitude[n].norm(), 0.0);
            }
            // Π_A = ∂τA/(4π)
            let want = -Complex64::i() * 0.3 / (4.0 * PI);
            assert!((v.amplitude[4] - want).norm() <= 1e-15);
            assert!(equation_residual(&m, &v, &f) <= 1e-12);
        }
    }

    #[test]
    fn conjugate_root_gives_conjugate_vector() {
        let m = SellmeierMedium::fused_silica();
        let f = frame();
        for r in roots(&m, 0.7) {
            // the complex conjugate of a solution at ω′ is the solution at −ω′ with (−ω*, −k*)
            let mut partner = r;
            partner.lab.omega = -r.lab.omega.conj();
            partner.lab.k = -r.lab.k.conj();
            partner.comoving.omega = -r.comoving.omega.conj();
            partner.comoving.k = -r.comoving.k.conj();
            let a = polarization_vector(&m, &r, &f).unwrap();
            let b = polarization_vector(&m, &partner, &f).unwrap();
            for n in 0..MODE_DIM {
                let tol = 1e-14 * a.amplitude[n].norm().max(1e-300);
                assert!((a.amplitude[n].conj() - b.amplitude[n]).norm() <= tol);
            }
            assert!(equation_residual(&m, &b, &f) <= 1e-10);
        }
    }

    #[test]
    fn norm_sign_follows_lab_frequency() {
        let f = frame();
        let step = IndexStep::new(SellmeierMedium::fused_silica(), 0.056).unwrap();
        for m in [step.right(), step.left()] {
            for wp in grid() {
                for r in roots(m, wp).iter().filter(|r| r.propagating) {
                    let v = polarization_vector(m, r, &f).unwrap();
                    let rho = scalar_product_density(&v, &v).unwrap();
                    assert!(rho.im.abs() <= 1e-14 * rho.norm());
                    assert_eq!(NormSign::of(rho.re), r.norm_sign.unwrap());
                    assert_eq!(rho.re > 0.0, r.lab.omega.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn current_is_group_velocity_times_density() {
        let m = SellmeierMedium::fused_silica();
        let f = frame();
        for wp in grid() {
            for r in roots(&m, wp).iter().filter(|r| r.propagating) {
                let v = polarization_vector(&m, r, &f).unwrap();
                let j = norm_current(&v, &v, &f).unwrap();
                let want = r.comoving_group_velocity.unwrap() * v.norm_density;
                assert!((j.re - want).abs() <= 1e-10 * want.abs(), "{} vs {}", j, want);
                assert!(j.im.abs() <= 1e-12 * j.norm());
            }
        }
    }

    #[test]
    fn distinct_modes_are_orthogonal() {
        let m = SellmeierMedium::fused_silica();
        let f = frame();
        let s = find_sli(&m, &f, Side::Right).unwrap().unwrap();
        for wp in [0.25, 0.4, 0.55, 0.7] {
            let modes: Vec<_> = labelled_modes(&m, wp, &f, Side::Right, Some(&s), &ModeSettings::default())
                .unwrap()
                .into_iter()
                .filter(|r| r.propagating)
                .map(|r| mode_vector(&m, &r, &f).unwrap())
                .collect();
            for (a_i, a) in modes.iter().enumerate() {
                for (b_i, b) in modes.iter().enumerate() {
                    let j = norm_current(a, b, &f).unwrap();
                    if a_i == b_i {
                        assert!((2.0 * PI * j.norm() - 1.0).abs() <= 1e-10);
                    } else {
                        assert!(j.norm() <= 1e-10, "cross current {j:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn normalization_properties() {
        let m = SellmeierMedium::fused_silica();
        let f = frame();
        for r in roots(&m, 0.4).iter().filter(|r| r.propagating) {
            let raw = polarization_vector(&m, r, &f).unwrap();
            let n1 = normalize(&raw).unwrap();
            let n2 = normalize(&n1).unwrap();
            let vg = r.comoving_group_velocity.unwrap();
            assert!((2.0 * PI * n1.norm_density.abs() * vg.abs() - 1.0).abs() <= 1e-12);
            assert_eq!(NormSign::of(n1.norm_density), r.norm_sign.unwrap());
            assert!(n1.amplitude[0].im == 0.0 && n1.amplitude[0].re > 0.0);
            let mut scaled = raw;
            scaled.amplitude = raw.amplitude.map(|c| c * Complex64::new(-2.5, 7.0));
            scaled.norm_density = density(&scaled.amplitude);
            let n3 = normalize(&scaled).unwrap();
            for n in 0..MODE_DIM {
                let tol = 1e-12 * n1.amplitude[n].norm().max(1e-300);
                assert!((n1.amplitude[n] - n2.amplitude[n]).norm() <= tol);
                assert!((n1.amplitude[n] - n3.amplitude[n]).norm() <= tol);
            }
        }
        let ev = roots(&m, 0.7).into_iter().find(|r| !r.propagating).unwrap();
        let raw = polarization_vector(&m, &ev, &f).unwrap();
        assert!(matches!(normalize(&raw), Err(RifError::NotPropagating { .. })));
    }

    #[test]
    fn amplitude_diverges_as_inverse_square_root_of_group_velocity_at_edge() {
        let m = SellmeierMedium::fused_silica();
        let f = frame();
        let s = find_sli(&m, &f, Side::Right).unwrap().unwrap();
        let mut pts = Vec::new();
        for e in 3..9 {
            let wp = s.omega_max * (1.0 - 10f64.powi(-e));
            let rs = labelled_modes(&m, wp, &f, Side::Right, Some(&s), &ModeSettings::default()).unwrap();
            let mo = rs
                .iter()
                .find(|r| r.label.unwrap().kind == crate::modes::ModeKind::Mo)
                .unwrap();
            let raw = polarization_vector(&m, mo, &f).unwrap();
            let amp = normalize(&raw).unwrap().amplitude[0].re;
            let vg = mo.comoving_group_velocity.unwrap();
            pts.push((vg.abs().ln(), amp.ln()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 0.5).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn mismatched_frequencies_rejected() {
        let m = SellmeierMedium::fused_silica();
        let f = frame();
        let a = polarization_vector(&m, &roots(&m, 0.3)[0], &f).unwrap();
        let b = polarization_vector(&m, &roots(&m, 0.31)[0], &f).unwrap();
        assert!(matches!(
            scalar_product_density(&a, &b),
            Err(RifError::MismatchedFrequency { .. })
        ));
    }

    #[test]
    fn metric_is_antisymmetric() {
        let m = NormMetric.matrix();
        for i in 0..MODE_DIM {
            for j in 0..MODE_DIM {
                assert_eq!(m[i][j], -m[j][i]);
            }
        }
    }
}
