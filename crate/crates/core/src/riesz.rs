//! Riesz distributions of type I and II: parameter validation, log-densities
//! and characteristic functions.
//!
//! The scale matrix enters both the characteristic function and the moment
//! formulas through a triangular factor `F` with `Sigma = F'F`:
//!
//! * type I uses the upper factor `F = L'` where `Sigma = L L'` (Cholesky);
//! * type II uses the lower factor `F` obtained from the Cholesky factor of the
//!   order-reversed matrix.
//!
//! Leading principal minors are multiplicative only under triangular
//! congruences of the matching orientation, so these are the factors for which
//! `phi(T) = q_{kappa+a}((I - iFTF')^{-1})` (type I) and
//! `phi(T) = q_{kappa-a}(I - iFTF')` (type II) are the exact transforms of the
//! densities. The symmetric square root gives the same result only when
//! `Sigma` is diagonal or `kappa` is constant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfderiv::CfRepresentation;
use crate::matcore::{
    cholesky_lower, reversal, ComplexSymMatrix, MatError, Mat, PosDefMatrix, SelectionMatrix,
    SymMatrix, C64,
};
use crate::specialfn::{
    ln_mv_gamma_weighted, ln_mv_gamma_weighted_neg, ExponentVector, GeneralizedPower,
    SpecialFnError, WeightVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "I")]
    TypeI,
    #[serde(rename = "II")]
    TypeII,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::TypeI => write!(f, "I"),
            Variant::TypeII => write!(f, "II"),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "1" | "i" => Ok(Variant::TypeI),
            "II" | "2" | "ii" => Ok(Variant::TypeII),
            other => Err(format!("unknown variant '{other}', expected I or II")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RieszError {
    #[error("type {variant} requires a > {bound} (strict), got a = {a} (short by {shortfall})")]
    Domain { variant: Variant, a: f64, bound: f64, shortfall: f64 },
    #[error("parameter a must be finite")]
    NonFiniteShape,
    #[error("kappa has length {kappa}, Sigma has order {sigma}")]
    DimensionMismatch { kappa: usize, sigma: usize },
    #[error("argument has order {got}, expected {expected}")]
    OrderMismatch { expected: usize, got: usize },
    #[error("characteristic-function argument is singular")]
    SingularArgument,
    #[error(transparent)]
    Special(#[from] SpecialFnError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

/// Unvalidated parameter set `(variant, a, kappa, Sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszParams {
    pub variant: Variant,
    pub a: f64,
    pub kappa: WeightVector,
    pub sigma: PosDefMatrix,
}

impl RieszParams {
    pub fn new(variant: Variant, a: f64, kappa: WeightVector, sigma: PosDefMatrix) -> Self {
        Self { variant, a, kappa, sigma }
    }

    pub fn order(&self) -> usize {
        self.sigma.order()
    }

    /// Strict lower bound on `a`: `(m-1)/2 - k_m` (type I) or
    /// `(m-1)/2 + k_1` (type II).
    pub fn shape_bound(&self) -> f64 {
        let half = (self.order() as f64 - 1.0) / 2.0;
        match self.variant {
            Variant::TypeI => half - self.kappa.last(),
            Variant::TypeII => half + self.kappa.first(),
        }
    }

    pub fn validate(self) -> Result<Riesz, RieszError> {
        Riesz::new(self)
    }
}

/// Validated parameters with the scale factor and normalizing constant cached.
#[derive(Debug, Clone)]
pub struct Riesz {
    params: RieszParams,
    factor: Mat,
    ln_norm: f64,
}

/// Lower triangular `R` with `A = R'R`, from the Cholesky factor of the
/// order-reversed matrix.
fn reverse_cholesky(a: &PosDefMatrix) -> Result<Mat, MatError> {
    let m = a.order();
    let p = reversal(m);
    let lt = cholesky_lower(&(&p * a.as_matrix() * &p))?;
    Ok(&p * lt.transpose() * &p)
}

impl Riesz {
    pub fn new(params: RieszParams) -> Result<Self, RieszError> {
        let m = params.order();
        if params.kappa.len() != m {
            return Err(RieszError::DimensionMismatch { kappa: params.kappa.len(), sigma: m });
        }
        if !params.a.is_finite() {
            return Err(RieszError::NonFiniteShape);
        }
        let bound = params.shape_bound();
        if !(params.a > bound) {
            return Err(RieszError::Domain {
                variant: params.variant,
                a: params.a,
                bound,
                shortfall: bound - params.a,
            });
        }
        let sigma = &params.sigma;
        let kappa_exp = params.kappa.as_exponent();
        let (factor, ln_norm) = match params.variant {
            Variant::TypeI => {
                let factor = sigma.cholesky().transpose();
                let ln_norm = ln_mv_gamma_weighted(params.a, &params.kappa)?
                    + params.a * sigma.ln_det()
                    + sigma.ln_gpower(&kappa_exp)?;
                (factor, ln_norm)
            }
            Variant::TypeII => {
                let factor = reverse_cholesky(sigma)?;
                // normalizer uses q_kappa(Sigma^{-1}); it equals 1/q_kappa(Sigma)
                // only for diagonal Sigma or constant kappa
                let ln_norm = ln_mv_gamma_weighted_neg(params.a, &params.kappa)?
                    + params.a * sigma.ln_det()
                    + sigma.inverse().ln_gpower(&kappa_exp)?;
                (factor, ln_norm)
            }
        };
        Ok(Self { params, factor, ln_norm })
    }

    pub fn params(&self) -> &RieszParams {
        &self.params
    }

    pub fn variant(&self) -> Variant {
        self.params.variant
    }

    pub fn a(&self) -> f64 {
        self.params.a
    }

    pub fn kappa(&self) -> &WeightVector {
        &self.params.kappa
    }

    pub fn sigma(&self) -> &PosDefMatrix {
        &self.params.sigma
    }

    pub fn order(&self) -> usize {
        self.params.order()
    }

    /// Triangular `F` with `Sigma = F'F` (upper for type I, lower for type II).
    pub fn scale_factor(&self) -> &Mat {
        &self.factor
    }

    /// `B_i = F' E_i E_i' F`, `i = 1..=m`; `B_m = Sigma`.
    pub fn b_matrix(&self, i: usize) -> Result<Mat, MatError> {
        let e = SelectionMatrix::new(self.order(), i)?;
        Ok(self.factor.transpose() * e.projector() * &self.factor)
    }

    /// `tau = kappa + a` (type I) or `kappa - a` (type II).
    pub fn cf_exponent(&self) -> ExponentVector {
        match self.variant() {
            Variant::TypeI => self.params.kappa.shifted(self.params.a),
            Variant::TypeII => self.params.kappa.shifted(-self.params.a),
        }
    }

    /// `ln` of the normalizing constant of the density.
    pub fn ln_normalizer(&self) -> f64 {
        self.ln_norm
    }

    fn check_order(&self, got: usize) -> Result<(), RieszError> {
        if got != self.order() {
            return Err(RieszError::OrderMismatch { expected: self.order(), got });
        }
        Ok(())
    }

    pub fn log_density(&self, x: &PosDefMatrix) -> Result<f64, RieszError> {
        self.check_order(x.order())?;
        let m = self.order() as f64;
        let kappa = self.params.kappa.as_exponent();
        let power = match self.variant() {
            Variant::TypeI => x.ln_gpower(&kappa)?,
            // minors of X^{-1} taken directly, not through 1/q_kappa(X)
            Variant::TypeII => x.inverse().ln_gpower(&kappa)?,
        };
        Ok(-self.ln_norm - self.sigma().trace_solve(x.as_matrix())
            + (self.params.a - (m + 1.0) / 2.0) * x.ln_det()
            + power)
    }

    pub fn density(&self, x: &PosDefMatrix) -> Result<f64, RieszError> {
        Ok(self.log_density(x)?.exp())
    }

    /// `F T F'`, the real symmetric matrix inside `I - i F T F'`.
    pub fn congruence(&self, t: &SymMatrix) -> Result<SymMatrix, RieszError> {
        self.check_order(t.order())?;
        Ok(SymMatrix::new(&self.factor * t.as_matrix() * self.factor.transpose())?)
    }

    pub fn char_fn(&self, t: &SymMatrix) -> Result<C64, RieszError> {
        let n = ComplexSymMatrix::identity_minus_i(&self.congruence(t)?);
        let tau = self.cf_exponent();
        match self.variant() {
            Variant::TypeI => {
                let inv = n.try_inverse().ok_or(RieszError::SingularArgument)?;
                Ok(inv.gpower(&tau)?)
            }
            Variant::TypeII => Ok(n.gpower(&tau)?),
        }
    }

    /// The same characteristic function written as `q_rho(I - i G T G')` with
    /// leading minors only: type II as is; type I through the complementary
    /// minors of the inverse, which are the trailing minors of `I - iFTF'`,
    /// i.e. leading minors after reversing the order (`G = P F`,
    /// `rho = -reverse(kappa + a)`).
    pub fn cf_representation(&self) -> CfRepresentation {
        match self.variant() {
            Variant::TypeI => CfRepresentation::new(
                reversal(self.order()) * &self.factor,
                self.cf_exponent().reversed().neg(),
            ),
            Variant::TypeII => CfRepresentation::new(self.factor.clone(), self.cf_exponent()),
        }
    }
}
