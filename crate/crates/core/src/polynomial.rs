//! Real-coefficient polynomials and their complex roots.
//!
//! Roots come from the eigenvalues of the balanced companion matrix.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Result, RifError};

/// Polynomial with real coefficients stored in ascending order (`coeffs[j]` multiplies `xʲ`).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| c * j as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        Self::new(
            (0..n)
                .map(|i| get(&self.coeffs, i) + get(&other.coeffs, i))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// q(x) = p(s·x).
    pub fn rescale_variable(&self, s: f64) -> Self {
        let mut f = 1.0;
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let v = c * f;
                    f *= s;
                    v
                })
                .collect(),
        )
    }

    /// All complex roots, counted with multiplicity.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.leading();
        if lead == 0.0 || !lead.is_finite() {
            return Err(RifError::DegenerateLeadingCoefficient);
        }
        if n == 1 {
            return Ok(vec![Complex64::new(-self.coeffs[0] / lead, 0.0)]);
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            m[(0, j)] = -self.coeffs[n - 1 - j] / lead;
        }
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        balance(&mut m);
        let schur = Schur::try_new(m, f64::EPSILON, 10_000).ok_or(RifError::RootCount {
            expected: n,
            found: 0,
        })?;
        let roots: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
        if roots.len() != n || roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
            return Err(RifError::RootCount {
                expected: n,
                found: roots.iter().filter(|r| r.re.is_finite()).count(),
            });
        }
        Ok(roots)
    }
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable (Parlett–Reinsch). Eigenvalues are unchanged.
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        m[(i, j)] *= g;
                    }
                    for j in 0..n {
                        m[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64]) -> Polynomial {
        roots.iter().fold(Polynomial::constant(1.0), |p, &r| {
            p.mul(&Polynomial::new(vec![-r, 1.0]))
        })
    }

    #[test]
    fn roots_of_known_product() {
        let expected = [0.05, 0.7, 3.0, -2.5, 40.0, -90.0];
        let p = from_roots(&expected);
        let mut got: Vec<f64> = p.roots().unwrap().iter().map(|r| r.re).collect();
        got.sort_by(f64::total_cmp);
        let mut want = expected.to_vec();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{g} vs {w}");
        }
    }

    #[test]
    fn complex_pair() {
        // x² + 1
        let p = Polynomial::new(vec![1.0, 0.0, 1.0]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn arithmetic() {
        let p = Polynomial::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.derivative().coeffs(), &[2.0, 6.0]);
        assert_eq!(p.add(&Polynomial::new(vec![0.0, 0.0, -3.0])).degree(), 1);
        let q = p.rescale_variable(2.0);
        let x = Complex64::new(0.3, -0.2);
        assert!((q.eval(x) - p.eval(x * 2.0)).norm() < 1e-14);
        assert!(Polynomial::constant(0.0).roots().unwrap().is_empty());
    }
}
