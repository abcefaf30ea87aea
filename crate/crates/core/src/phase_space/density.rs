use super::{ClassicalHamiltonian, PhaseGrid};
use crate::error::{Error, Result};

/// Relative negativity tolerance: values above `-EPS_NEG * max` count as
/// scheme noise.
pub const EPS_NEG: f64 = 1e-12;

/// Normalization tolerance for a classical density.
pub const NORM_TOL: f64 = 1e-8;

/// Non-negative probability density on a [`PhaseGrid`], unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDensity {
    grid: PhaseGrid,
    values: Vec<f64>,
}

impl ClassicalDensity {
    /// Wraps a nodal field that is already a normalized density.
    pub fn new(grid: PhaseGrid, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        check_non_negative(&values)?;
        let mass = grid.quadrature(&values);
        if (mass - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("classical density has mass {mass}")));
        }
        Ok(Self { grid, values })
    }

    /// Clamps scheme noise and rescales to unit mass.
    pub fn normalized(grid: PhaseGrid, mut values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        clamp_noise(&mut values)?;
        let mass = grid.quadrature(&values);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidState(format!("cannot normalize field of mass {mass}")));
        }
        let scale = 1.0 / mass;
        values.iter_mut().for_each(|v| *v *= scale);
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: PhaseGrid, values: Vec<f64>) -> Self {
        Self { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.grid.quadrature(&self.values)
    }

    /// Quadrature of `ρ²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()
    }
}

fn check_len(grid: &PhaseGrid, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: len,
        });
    }
    Ok(())
}

fn check_non_negative(values: &[f64]) -> Result<()> {
    let max = values.iter().copied().fold(0.0, f64::max);
    let tol = EPS_NEG * max;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite("density value".into()));
        }
        if v < -tol {
            return Err(Error::NegativeDensity { value: v, tolerance: tol });
        }
    }
    Ok(())
}

/// Sets values in `[-EPS_NEG * max, 0)` to zero; anything more negative is
/// a genuine failure.
pub(crate) fn clamp_noise(values: &mut [f64]) -> Result<()> {
    check_non_negative(values)?;
    values.iter_mut().filter(|v| **v < 0.0).for_each(|v| *v = 0.0);
    Ok(())
}

/// Unnormalized Gaussian `exp(-(q-q0)²/2σq² - (p-p0)²/2σp²)` sampled at the
/// grid nodes.
pub(crate) fn gaussian_profile(grid: &PhaseGrid, q0: f64, p0: f64, sigma_q: f64, sigma_p: f64) -> Vec<f64> {
    // separable: sample each axis once
    let gq: Vec<f64> = (0..grid.n_q())
        .map(|i| {
            let x = (grid.q(i) - q0) / sigma_q;
            (-0.5 * x * x).exp()
        })
        .collect();
    let gp: Vec<f64> = (0..grid.n_p())
        .map(|j| {
            let x = (grid.p(j) - p0) / sigma_p;
            (-0.5 * x * x).exp()
        })
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for a in &gq {
        out.extend(gp.iter().map(|b| a * b));
    }
    out
}

/// Checks that `(σq, σp)` spans at least two cells on each axis.
pub fn check_resolved(grid: &PhaseGrid, sigma_q: f64, sigma_p: f64) -> Result<()> {
    if !(sigma_q >= 2.0 * grid.dq()) {
        return Err(Error::UnderResolved {
            axis: 'q',
            sigma: sigma_q,
            min_width: 2.0 * grid.dq(),
        });
    }
    if !(sigma_p >= 2.0 * grid.dp()) {
        return Err(Error::UnderResolved {
            axis: 'p',
            sigma: sigma_p,
            min_width: 2.0 * grid.dp(),
        });
    }
    Ok(())
}

/// Regularized point state: a normalized Gaussian of widths `(σq, σp)`
/// centred on `(q0, p0)`.
pub fn gaussian_state(grid: &PhaseGrid, q0: f64, p0: f64, sigma_q: f64, sigma_p: f64) -> Result<ClassicalDensity> {
    if !grid.contains(q0, p0) {
        return Err(Error::OutsideGrid { q: q0, p: p0 });
    }
    check_resolved(grid, sigma_q, sigma_p)?;
    ClassicalDensity::normalized(*grid, gaussian_profile(grid, q0, p0, sigma_q, sigma_p))
}

fn observable_values(f: &ClassicalHamiltonian, grid: &PhaseGrid) -> Result<Vec<f64>> {
    let values = grid.sample(|q, p| f.value(q, p));
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observable value on grid".into()));
    }
    Ok(values)
}

/// Phase-space average `∫∫ f ρ dq dp` by midpoint quadrature.
pub fn mean_observable(f: &ClassicalHamiltonian, rho: &ClassicalDensity) -> Result<f64> {
    let fv = observable_values(f, rho.grid())?;
    let product: Vec<f64> = fv.iter().zip(rho.values()).map(|(a, b)| a * b).collect();
    Ok(rho.grid().quadrature(&product))
}

/// Operator kernel diagonal in the node basis `|q_i⟩⊗|p_j⟩`.
///
/// Functions of the commuting operators `q̂`, `p̂` are diagonal in this
/// basis, so products and traces reduce to node-wise arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalKernel {
    diag: Vec<f64>,
}

impl DiagonalKernel {
    pub fn of_observable(f: &ClassicalHamiltonian, grid: &PhaseGrid) -> Result<Self> {
        Ok(Self {
            diag: observable_values(f, grid)?,
        })
    }

    pub fn of_density(rho: &ClassicalDensity) -> Self {
        Self {
            diag: rho.values().to_vec(),
        }
    }

    pub fn compose(&self, other: &DiagonalKernel) -> DiagonalKernel {
        DiagonalKernel {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }
}

/// Mean value as the trace ratio `Tr(f ρ) / Tr ρ` of the diagonal kernels.
pub fn mean_observable_trace(f: &ClassicalHamiltonian, rho: &ClassicalDensity) -> Result<f64> {
    let fk = DiagonalKernel::of_observable(f, rho.grid())?;
    let rk = DiagonalKernel::of_density(rho);
    Ok(fk.compose(&rk).trace() / rk.trace())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid128() -> PhaseGrid {
        PhaseGrid::new(-5.0, 5.0, -5.0, 5.0, 128, 128).unwrap()
    }

    /// Closed-form Gaussian moments, checked against brute-force quadrature
    /// on a much finer grid.
    fn fine_moment(q0: f64, p0: f64, sigma: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let n = 2000;
        let (lo, hi) = (-8.0, 8.0);
        let h = (hi - lo) / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let q = lo + (i as f64 + 0.5) * h;
            for j in 0..n {
                let p = lo + (j as f64 + 0.5) * h;
                let w = (-((q - q0).powi(2) + (p - p0).powi(2)) / (2.0 * sigma * sigma)).exp();
                num += w * f(q, p);
                den += w;
            }
        }
        num / den
    }

    #[test]
    fn gaussian_is_normalized_and_centred() {
        let rho = gaussian_state(&grid128(), 0.0, 0.0, 0.5, 0.5).unwrap();
        assert!((rho.mass() - 1.0).abs() < 1e-12);
        let q = ClassicalHamiltonian::polynomial([(1, 0, 1.0)]).unwrap();
        let p = ClassicalHamiltonian::polynomial([(0, 1, 1.0)]).unwrap();
        assert!(mean_observable(&q, &rho).unwrap().abs() < 1e-10);
        assert!(mean_observable(&p, &rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn second_moment_matches_oracle() {
        let oracle = fine_moment(0.0, 0.0, 0.5, |q, _| q * q);
        assert!((oracle - 0.25).abs() < 1e-9, "oracle {oracle}");
        let rho = gaussian_state(&grid128(), 0.0, 0.0, 0.5, 0.5).unwrap();
        let q2 = ClassicalHamiltonian::polynomial([(2, 0, 1.0)]).unwrap();
        assert!((mean_observable(&q2, &rho).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn harmonic_energy_of_displaced_gaussian() {
        // 0.5 (q0² + p0² + σq² + σp²) = 0.5 (1 + 0 + 2·0.25)
        let oracle = fine_moment(1.0, 0.0, 0.5, |q, p| 0.5 * (q * q + p * p));
        assert!((oracle - 0.75).abs() < 1e-9, "oracle {oracle}");
        let rho = gaussian_state(&grid128(), 1.0, 0.0, 0.5, 0.5).unwrap();
        let e = mean_observable(&ClassicalHamiltonian::harmonic(), &rho).unwrap();
        assert!((e - 0.75).abs() < 1e-6, "{e}");
    }

    #[test]
    fn constant_observable_has_unit_mean() {
        let rho = gaussian_state(&grid128(), 0.3, -1.0, 0.4, 0.6).unwrap();
        let one = ClassicalHamiltonian::polynomial([(0, 0, 1.0)]).unwrap();
        assert!((mean_observable(&one, &rho).unwrap() - 1.0).abs() < 1e-12);
        assert!((mean_observable_trace(&one, &rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn under_resolved_width_names_minimum() {
        let g = grid128();
        match gaussian_state(&g, 0.0, 0.0, 0.1, 0.5) {
            Err(Error::UnderResolved { axis, min_width, .. }) => {
                assert_eq!(axis, 'q');
                assert_eq!(min_width, 2.0 * g.dq());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            gaussian_state(&g, 6.0, 0.0, 0.5, 0.5),
            Err(Error::OutsideGrid { .. })
        ));
    }

    #[test]
    fn negativity_tolerance() {
        let g = PhaseGrid::new(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap();
        let mut v = vec![1.0; 64];
        v[3] = -1e-14;
        let rho = ClassicalDensity::normalized(g, v.clone()).unwrap();
        assert_eq!(rho.values()[3], 0.0);
        v[3] = -1e-6;
        assert!(matches!(
            ClassicalDensity::normalized(g, v),
            Err(Error::NegativeDensity { .. })
        ));
    }
}
