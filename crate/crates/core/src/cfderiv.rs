//! Analytic first and second derivatives of the characteristic functions and a
//! finite-difference oracle for checking them.
//!
//! Both variants are handled through one representation,
//! `phi(T) = q_rho(I - i G T G')`, with
//! `ln phi = sum_j c_j ln|N_j|`, `c_j = rho_j - rho_{j+1}` and `N_j` the leading
//! `j x j` block of `N = I - iGTG'`. With the resolvents
//! `A_j = G'E_j N_j^{-1} E_j'G`:
//!
//! ```text
//! d phi     = -i phi sum_j c_j tr(A_j dT)
//! d^2 phi   = i^2 phi { sum_i sum_j c_i c_j tr(A_i dT) tr(A_j dT)
//!                       - sum_j c_j tr(A_j dT A_j dT) }
//! ```
//!
//! which vectorizes to the gradient `-i phi N_m sum_j c_j vec A_j` and the
//! Hessian `i^2 phi N_m { ... - sum_j c_j (A_j (x) A_j) } N_m`.

use nalgebra::DVector;

use crate::matcore::{
    leading_principal_submatrix, max_abs_entry, symmetrizer, vec, CMat, ComplexSymMatrix, Mat,
    SymMatrix, C64,
};
use crate::riesz::{Riesz, RieszError};
use crate::specialfn::{ExponentVector, GeneralizedPower};

/// `phi(T) = q_rho(I - i G T G')`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfRepresentation {
    factor: Mat,
    exponent: ExponentVector,
}

/// `A_alpha = G'E_alpha (E_alpha' N E_alpha)^{-1} E_alpha' G`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmatrixResolvent {
    pub index: usize,
    pub value: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfDerivatives {
    pub value: C64,
    /// `d vec phi / d vec' T`, stored as a column of length `m^2`.
    pub gradient: DVector<C64>,
    /// `m^2 x m^2`.
    pub hessian: CMat,
}

fn to_complex(a: &Mat) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

impl CfRepresentation {
    pub fn new(factor: Mat, exponent: ExponentVector) -> Self {
        Self { factor, exponent }
    }

    pub fn factor(&self) -> &Mat {
        &self.factor
    }

    pub fn exponent(&self) -> &ExponentVector {
        &self.exponent
    }

    pub fn order(&self) -> usize {
        self.factor.nrows()
    }

    /// `I - i G T G'`.
    pub fn argument(&self, t: &SymMatrix) -> Result<ComplexSymMatrix, RieszError> {
        if t.order() != self.order() {
            return Err(RieszError::OrderMismatch { expected: self.order(), got: t.order() });
        }
        let inner = SymMatrix::new(&self.factor * t.as_matrix() * self.factor.transpose())?;
        Ok(ComplexSymMatrix::identity_minus_i(&inner))
    }

    pub fn value(&self, t: &SymMatrix) -> Result<C64, RieszError> {
        Ok(self.argument(t)?.gpower(&self.exponent)?)
    }

    fn resolvent_of(&self, n: &ComplexSymMatrix, alpha: usize) -> Result<CMat, RieszError> {
        let block = leading_principal_submatrix(n.as_matrix(), alpha)?;
        let rows = to_complex(&self.factor.rows(0, alpha).into_owned());
        let solved = block.lu().solve(&rows).ok_or(RieszError::SingularArgument)?;
        let a = rows.transpose() * solved;
        let half = C64::new(0.5, 0.0);
        Ok((&a + a.transpose()) * half)
    }

    pub fn resolvent(&self, t: &SymMatrix, alpha: usize) -> Result<SubmatrixResolvent, RieszError> {
        let n = self.argument(t)?;
        Ok(SubmatrixResolvent { index: alpha, value: self.resolvent_of(&n, alpha)? })
    }

    /// Non-zero `(c_j, A_j)` pairs; tied exponents are skipped.
    fn weighted_resolvents(
        &self,
        n: &ComplexSymMatrix,
    ) -> Result<Vec<(f64, CMat)>, RieszError> {
        self.exponent
            .differences()
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != 0.0)
            .map(|(j, c)| Ok((c, self.resolvent_of(n, j + 1)?)))
            .collect()
    }

    pub fn gradient(&self, t: &SymMatrix) -> Result<DVector<C64>, RieszError> {
        let n = self.argument(t)?;
        let phi = n.gpower(&self.exponent)?;
        let terms = self.weighted_resolvents(&n)?;
        Ok(self.gradient_from(phi, &terms))
    }

    fn gradient_from(&self, phi: C64, terms: &[(f64, CMat)]) -> DVector<C64> {
        let m = self.order();
        let nm = to_complex(&symmetrizer(m));
        let mut acc = DVector::<C64>::zeros(m * m);
        for (c, a) in terms {
            acc += vec(a) * C64::new(*c, 0.0);
        }
        nm * acc * (C64::new(0.0, -1.0) * phi)
    }

    pub fn derivatives(&self, t: &SymMatrix) -> Result<CfDerivatives, RieszError> {
        let m = self.order();
        let n = self.argument(t)?;
        let phi = n.gpower(&self.exponent)?;
        let terms = self.weighted_resolvents(&n)?;
        let gradient = self.gradient_from(phi, &terms);

        let vecs: Vec<DVector<C64>> = terms.iter().map(|(_, a)| vec(a)).collect();
        let mut inner = CMat::zeros(m * m, m * m);
        // squared terms
        for ((c, _), v) in terms.iter().zip(&vecs) {
            inner += v * v.transpose() * C64::new(c * c, 0.0);
        }
        // cross terms, both (i, j) and (j, i) halves
        let mut cross = CMat::zeros(m * m, m * m);
        for (i, (ci, _)) in terms.iter().enumerate() {
            for (j, (cj, _)) in terms.iter().enumerate() {
                if i != j {
                    cross += &vecs[i] * vecs[j].transpose() * C64::new(ci * cj, 0.0);
                }
            }
        }
        inner += (&cross + cross.transpose()) * C64::new(0.5, 0.0);
        // Kronecker terms
        for (c, a) in &terms {
            inner -= a.kronecker(a) * C64::new(*c, 0.0);
        }
        let nm = to_complex(&symmetrizer(m));
        let hessian = &nm * inner * &nm * (C64::new(-1.0, 0.0) * phi);
        Ok(CfDerivatives { value: phi, gradient, hessian })
    }
}

pub fn cf_gradient(dist: &Riesz, t: &SymMatrix) -> Result<DVector<C64>, RieszError> {
    dist.cf_representation().gradient(t)
}

pub fn cf_hessian(dist: &Riesz, t: &SymMatrix) -> Result<CMat, RieszError> {
    Ok(dist.cf_representation().derivatives(t)?.hessian)
}

pub fn cf_derivatives(dist: &Riesz, t: &SymMatrix) -> Result<CfDerivatives, RieszError> {
    dist.cf_representation().derivatives(t)
}

/// `grad . vec(H)`.
pub fn directional_gradient(gradient: &DVector<C64>, h: &SymMatrix) -> C64 {
    gradient
        .iter()
        .zip(h.as_matrix().iter())
        .map(|(g, x)| g * x)
        .sum()
}

/// `vec'(H1) Hessian vec(H2)`.
pub fn hessian_bilinear(hessian: &CMat, h1: &SymMatrix, h2: &SymMatrix) -> C64 {
    let v1 = vec(&to_complex(h1.as_matrix()));
    let v2 = vec(&to_complex(h2.as_matrix()));
    (v1.transpose() * hessian * v2)[(0, 0)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction<'a> {
    First(&'a SymMatrix),
    Mixed(&'a SymMatrix, &'a SymMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    /// Base step is `rel_step * (1 + max|T_rs|)`.
    pub rel_step: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { rel_step: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub value: C64,
    /// `|Richardson - D(h/2)|`.
    pub error: f64,
}

/// Central differences of `char_fn` along symmetric directions with one
/// Richardson step over `h` and `h/2`.
pub fn fd_directional(
    dist: &Riesz,
    t: &SymMatrix,
    direction: Direction<'_>,
    config: FdConfig,
) -> Result<FdEstimate, RieszError> {
    let h0 = config.rel_step * (1.0 + max_abs_entry(t.as_matrix()));
    let at = |shift: &Mat| -> Result<C64, RieszError> {
        dist.char_fn(&SymMatrix::new(t.as_matrix() + shift)?)
    };
    let diff = |h: f64| -> Result<C64, RieszError> {
        match direction {
            Direction::First(d) => {
                let s = d.as_matrix() * h;
                Ok((at(&s)? - at(&(-&s))?) / (2.0 * h))
            }
            Direction::Mixed(d1, d2) => {
                let s1 = d1.as_matrix() * h;
                let s2 = d2.as_matrix() * h;
                let pp = at(&(&s1 + &s2))?;
                let pm = at(&(&s1 - &s2))?;
                let mp = at(&(-&s1 + &s2))?;
                let mm = at(&(-&s1 - &s2))?;
                Ok((pp - pm - mp + mm) / (4.0 * h * h))
            }
        }
    };
    let coarse = diff(h0)?;
    let fine = diff(h0 / 2.0)?;
    let value = (fine * 4.0 - coarse) / 3.0;
    Ok(FdEstimate { value, error: (value - fine).norm() })
}
