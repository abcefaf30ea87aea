//! Finite-dimensional density matrices and their diagnostics.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension handled by the dense eigensolves.
pub const MAX_DIM: usize = 16;

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;

/// Hermitian, unit-trace state of the quantum subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDensity {
    m: CMatrix,
}

impl QuantumDensity {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        let rho = Self::unchecked_psd(m)?;
        let min = rho.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Validates Hermiticity and trace only. Marginals of a hybrid state
    /// need not be positive mid-run; their spectrum is reported instead.
    pub fn unchecked_psd(m: CMatrix) -> Result<Self> {
        check_dim(&m)?;
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        Ok(Self { m })
    }

    /// Marginal of a hybrid state; Hermitian by construction, trace and
    /// spectrum reported rather than enforced.
    pub(crate) fn from_marginal(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let d = weights.len();
        let m = CMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(weights[i], 0.0) } else { Complex64::default() });
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.m)[0]
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        let out = u * &self.m * u.adjoint();
        Self::unchecked_psd(symmetrize(out))
    }
}

fn check_dim(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.nrows() == 0 || m.nrows() > MAX_DIM {
        return Err(Error::UnsupportedDimension(m.nrows()));
    }
    Ok(())
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..=i {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Averages `m` with its adjoint so that stored entries are exactly
/// conjugate-symmetric.
pub fn symmetrize(m: CMatrix) -> CMatrix {
    let d = m.nrows();
    let mut out = m;
    for i in 0..d {
        out[(i, i)].im = 0.0;
        for j in 0..i {
            let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
            out[(i, j)] = avg;
            out[(j, i)] = avg.conj();
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = match m.nrows() {
        1 => vec![m[(0, 0)].re],
        2 => {
            let (a, b, x) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
            let (lo, hi) = eig2(a, b, x.norm());
            vec![lo, hi]
        }
        _ => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    };
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectrum of `[[a, x], [x*, b]]` given `|x|`.
#[inline]
pub fn eig2(a: f64, b: f64, abs_x: f64) -> (f64, f64) {
    let mean = 0.5 * (a + b);
    let r = (0.5 * (a - b)).hypot(abs_x);
    (mean - r, mean + r)
}

/// Smallest eigenvalue of a Hermitian matrix (`d ≤ 16`).
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    check_dim(m)?;
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL {
        return Err(Error::NonHermitian(dev));
    }
    Ok(hermitian_eigenvalues(m)[0])
}

/// `|c⟩⟨c| / ⟨c|c⟩`.
pub fn pure_from_amplitudes(c: &[Complex64]) -> Result<QuantumDensity> {
    let norm_sq: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if norm_sq == 0.0 || !norm_sq.is_finite() {
        return Err(Error::ZeroAmplitudes);
    }
    let d = c.len();
    if d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let m = CMatrix::from_fn(d, d, |i, j| c[i] * c[j].conj() / norm_sq);
    Ok(QuantumDensity { m: symmetrize(m) })
}

/// `Tr ρ²`.
pub fn purity(rho: &QuantumDensity) -> f64 {
    // Tr ρ² = Σ_ij |ρ_ij|² for Hermitian ρ
    rho.m.iter().map(|z| z.norm_sqr()).sum()
}

/// `-Σ λ ln λ` over the spectrum, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &QuantumDensity) -> Result<f64> {
    let ev = hermitian_eigenvalues(&rho.m);
    let mut s = 0.0;
    for &l in &ev {
        if l < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:e}")));
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// Measured observable `V_qm = Σ v_i |ψ_i⟩⟨ψ_i|`, stored in its eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredObservable {
    eigenvalues: Vec<f64>,
}

impl MeasuredObservable {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(eigenvalues.len()));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observable eigenvalue".into()));
        }
        Ok(Self { eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn v(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    /// At least two distinct eigenvalues.
    pub fn is_nontrivial(&self) -> bool {
        self.eigenvalues.iter().any(|&v| v != self.eigenvalues[0])
    }

    /// `max_ij |v_i - v_j|`.
    pub fn max_gap(&self) -> f64 {
        let lo = self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_and_superposition_states() {
        let rho = pure_from_amplitudes(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(rho.entry(0, 0), c(1.0, 0.0));
        assert_eq!(rho.entry(1, 1), c(0.0, 0.0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = pure_from_amplitudes(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((rho.entry(i, j) - c(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn complex_amplitudes() {
        // c = (1, 2i)/√5: ρ_12 = c_1 c_2* = 1·(-2i)/5
        let r5 = 5f64.sqrt();
        let rho = pure_from_amplitudes(&[c(1.0 / r5, 0.0), c(0.0, 2.0 / r5)]).unwrap();
        assert!((rho.entry(0, 1) - c(0.0, -0.4)).norm() < 1e-15);
        assert!((rho.entry(1, 1) - c(0.8, 0.0)).norm() < 1e-15);
        assert!((purity(&rho) - 1.0).abs() < 1e-12);
        // dephased version: Σ|c_i|⁴ = 1/25 + 16/25
        let deph = QuantumDensity::diagonal(&[0.2, 0.8]).unwrap();
        assert!((purity(&deph) - 0.68).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitudes_rejected() {
        assert!(matches!(pure_from_amplitudes(&[c(0.0, 0.0); 3]), Err(Error::ZeroAmplitudes)));
    }

    #[test]
    fn entropy_values() {
        let pure = pure_from_amplitudes(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-9);
        let mixed = QuantumDensity::diagonal(&[0.5, 0.5]).unwrap();
        assert!((von_neumann_entropy(&mixed).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((purity(&mixed) - 0.5).abs() < 1e-15);
        // -(0.2 ln 0.2 + 0.8 ln 0.8), evaluated independently
        let expected = 0.500_402_423_538_188_4;
        let s = von_neumann_entropy(&QuantumDensity::diagonal(&[0.2, 0.8]).unwrap()).unwrap();
        assert!((s - expected).abs() < 1e-9);
    }

    #[test]
    fn entropy_rejects_negative_spectrum() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.9, 0.0), c(0.9, 0.0), c(0.5, 0.0)]);
        let rho = QuantumDensity::unchecked_psd(m.clone()).unwrap();
        assert!(von_neumann_entropy(&rho).is_err());
        assert!(QuantumDensity::new(m).is_err());
    }

    #[test]
    fn min_eigenvalue_examples() {
        let id = CMatrix::identity(2, 2);
        assert_eq!(min_eigenvalue(&id).unwrap(), 1.0);
        let x = c(0.3, 0.0);
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), x, x.conj(), c(0.0, 0.0)]);
        assert!((min_eigenvalue(&m).unwrap() + 0.3).abs() < 1e-15);
        let d = CMatrix::from_row_slice(2, 2, &[c(0.68, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.32, 0.0)]);
        assert!((min_eigenvalue(&d).unwrap() - 0.32).abs() < 1e-15);
    }

    #[test]
    fn min_eigenvalue_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(min_eigenvalue(&m), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn general_solver_agrees_with_closed_form() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.1, -0.25), c(0.1, 0.25), c(0.7, 0.0)]);
        let closed = hermitian_eigenvalues(&m);
        let general: Vec<f64> = {
            let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        assert!((closed[0] - general[0]).abs() < 1e-14);
        assert!((closed[1] - general[1]).abs() < 1e-14);
    }

    #[test]
    fn observable_gap() {
        let v = MeasuredObservable::new(vec![1.0, -1.0, 0.5]).unwrap();
        assert!(v.is_nontrivial());
        assert_eq!(v.max_gap(), 2.0);
        assert!(!MeasuredObservable::new(vec![0.3, 0.3]).unwrap().is_nontrivial());
        assert!(MeasuredObservable::new(vec![]).is_err());
    }
}
