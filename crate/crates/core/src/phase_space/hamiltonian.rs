use crate::error::{Error, Result};

/// Highest total degree accepted in a polynomial observable.
pub const MAX_DEGREE: u32 = 4;

/// One term `coeff * q^q_pow * p^p_pow`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub q_pow: u32,
    pub p_pow: u32,
    pub coeff: f64,
}

/// Real polynomial in (q, p) of total degree at most four.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: impl IntoIterator<Item = (u32, u32, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b, c) in terms {
            if a + b > MAX_DEGREE {
                return Err(Error::InvalidObservable(format!(
                    "monomial q^{a} p^{b} exceeds total degree {MAX_DEGREE}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidObservable(format!("non-finite coefficient of q^{a} p^{b}")));
            }
            out.push(Monomial {
                q_pow: a,
                p_pow: b,
                coeff: c,
            });
        }
        Ok(Self { terms: out })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn value(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coeff * q.powi(m.q_pow as i32) * p.powi(m.p_pow as i32))
            .sum()
    }

    pub fn d_dq(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .filter(|m| m.q_pow > 0)
            .map(|m| m.coeff * m.q_pow as f64 * q.powi(m.q_pow as i32 - 1) * p.powi(m.p_pow as i32))
            .sum()
    }

    pub fn d_dp(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .filter(|m| m.p_pow > 0)
            .map(|m| m.coeff * m.p_pow as f64 * q.powi(m.q_pow as i32) * p.powi(m.p_pow as i32 - 1))
            .sum()
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: m.coeff * factor,
                    ..*m
                })
                .collect(),
        }
    }
}

/// Classical Hamiltonian (or observable) as a function of the commuting
/// phase-space operators. Also serves as the coupling factor `V_cm` of a
/// product Hamiltonian `V_qm ⊗ V_cm`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalHamiltonian {
    /// `H = v p`
    LinearP { v: f64 },
    /// `H = (p² + q²) / 2`, optionally scaled.
    Harmonic { scale: f64 },
    Polynomial(Polynomial),
}

impl ClassicalHamiltonian {
    pub fn zero() -> Self {
        ClassicalHamiltonian::Polynomial(Polynomial::default())
    }

    pub fn linear_p(v: f64) -> Self {
        ClassicalHamiltonian::LinearP { v }
    }

    pub fn harmonic() -> Self {
        ClassicalHamiltonian::Harmonic { scale: 1.0 }
    }

    /// `H = k q`
    pub fn linear_q(k: f64) -> Self {
        ClassicalHamiltonian::Polynomial(Polynomial {
            terms: vec![Monomial {
                q_pow: 1,
                p_pow: 0,
                coeff: k,
            }],
        })
    }

    pub fn polynomial(terms: impl IntoIterator<Item = (u32, u32, f64)>) -> Result<Self> {
        Polynomial::new(terms).map(ClassicalHamiltonian::Polynomial)
    }

    pub fn value(&self, q: f64, p: f64) -> f64 {
        match self {
            ClassicalHamiltonian::LinearP { v } => v * p,
            ClassicalHamiltonian::Harmonic { scale } => 0.5 * scale * (p * p + q * q),
            ClassicalHamiltonian::Polynomial(poly) => poly.value(q, p),
        }
    }

    pub fn dh_dq(&self, q: f64, p: f64) -> f64 {
        match self {
            ClassicalHamiltonian::LinearP { .. } => 0.0,
            ClassicalHamiltonian::Harmonic { scale } => scale * q,
            ClassicalHamiltonian::Polynomial(poly) => poly.d_dq(q, p),
        }
    }

    pub fn dh_dp(&self, q: f64, p: f64) -> f64 {
        match self {
            ClassicalHamiltonian::LinearP { v } => *v,
            ClassicalHamiltonian::Harmonic { scale } => scale * p,
            ClassicalHamiltonian::Polynomial(poly) => poly.d_dp(q, p),
        }
    }

    /// `factor * H`; used for the block generators `((v_i + v_j)/2) V_cm`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ClassicalHamiltonian::LinearP { v } => ClassicalHamiltonian::LinearP { v: v * factor },
            ClassicalHamiltonian::Harmonic { scale } => ClassicalHamiltonian::Harmonic {
                scale: scale * factor,
            },
            ClassicalHamiltonian::Polynomial(poly) => ClassicalHamiltonian::Polynomial(poly.scaled(factor)),
        }
    }

    /// True when the flow generated by `H` is the identity (H constant).
    pub fn has_trivial_flow(&self) -> bool {
        match self {
            ClassicalHamiltonian::LinearP { v } => *v == 0.0,
            ClassicalHamiltonian::Harmonic { scale } => *scale == 0.0,
            ClassicalHamiltonian::Polynomial(poly) => poly.terms.iter().all(|m| m.coeff == 0.0 || m.q_pow + m.p_pow == 0),
        }
    }

    /// `H = T(p) + U(q)`: no monomial mixes q and p.
    pub fn is_separable(&self) -> bool {
        match self {
            ClassicalHamiltonian::Polynomial(poly) => poly
                .terms
                .iter()
                .all(|m| m.coeff == 0.0 || m.q_pow == 0 || m.p_pow == 0),
            _ => true,
        }
    }

    /// Expanded monomial form.
    pub fn to_polynomial(&self) -> Polynomial {
        match self {
            ClassicalHamiltonian::LinearP { v } => Polynomial {
                terms: vec![Monomial {
                    q_pow: 0,
                    p_pow: 1,
                    coeff: *v,
                }],
            },
            ClassicalHamiltonian::Harmonic { scale } => Polynomial {
                terms: vec![
                    Monomial {
                        q_pow: 2,
                        p_pow: 0,
                        coeff: 0.5 * scale,
                    },
                    Monomial {
                        q_pow: 0,
                        p_pow: 2,
                        coeff: 0.5 * scale,
                    },
                ],
            },
            ClassicalHamiltonian::Polynomial(poly) => poly.clone(),
        }
    }

    /// `alpha * self + beta * other`, as a polynomial.
    pub fn linear_combination(&self, alpha: f64, other: &ClassicalHamiltonian, beta: f64) -> Self {
        let mut terms = self.to_polynomial().scaled(alpha).terms;
        terms.extend(other.to_polynomial().scaled(beta).terms);
        ClassicalHamiltonian::Polynomial(Polynomial { terms })
    }

    /// Largest |∂H/∂p| and |∂H/∂q| over the nodes of `grid`.
    pub fn max_velocities(&self, grid: &super::PhaseGrid) -> (f64, f64) {
        let mut vq: f64 = 0.0;
        let mut vp: f64 = 0.0;
        for k in 0..grid.len() {
            let (q, p) = grid.node(k);
            vq = vq.max(self.dh_dp(q, p).abs());
            vp = vp.max(self.dh_dq(q, p).abs());
        }
        (vq, vp)
    }

    /// Largest |H| over the nodes of `grid`.
    pub fn max_abs(&self, grid: &super::PhaseGrid) -> f64 {
        (0..grid.len())
            .map(|k| {
                let (q, p) = grid.node(k);
                self.value(q, p).abs()
            })
            .fold(0.0, f64::max)
    }
}
