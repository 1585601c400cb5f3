//! Mean and covariance of `vec X` for both variants, in closed form and from
//! the characteristic function, plus the Wishart case and the asymptotic
//! covariance of the sample covariance matrix.
//!
//! With `d_i = k_i - k_{i+1}` (`k_{m+1} = 0`) and `B_i = F'E_iE_i'F`:
//!
//! ```text
//! E_I  X = (k_m + a) Sigma + sum_{i<m} d_i B_i
//! E_II X = -(k_m - a) Sigma - sum_{i<m} d_i B_i
//! Cov_I  = (k_m + a) N(Sigma (x) Sigma)
//!          + sum_{i<m} d_i N(B_i (x) Sigma + Sigma (x) B_i - B_i (x) B_i)
//! Cov_II = -(k_m - a) N(Sigma (x) Sigma) - sum_{i<m} d_i N(B_i (x) B_i)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cfderiv::{cf_derivatives, fd_directional, Direction, FdConfig};
use crate::matcore::{
    numerical_rank, symmetrizer, vec, Mat, MatrixFile, PosDefMatrix, SelectionMatrix, SymMatrix,
};
use crate::riesz::{Riesz, RieszError, Variant};
use crate::verify::{estimate_moments, quadrature_m1, McConfig, McEstimate, VerifyError};

/// Relative singular-value cutoff for [`asymptotic_cov`].
pub const RANK_TOL: f64 = 1e-10;

pub const ERRATUM_NOTE: &str = "Coefficients are d_i = k_i - k_{i+1} with k_{m+1} = 0, not \
k_i - k_{i-1}. B_i = F'E_iE_i'F where Sigma = F'F with F upper triangular (type I) or lower \
triangular (type II). The type I covariance carries the cross terms \
d_i N(B_i (x) Sigma + Sigma (x) B_i - B_i (x) B_i); the type II covariance is \
-(k_m - a) N(Sigma (x) Sigma) - sum d_i N(B_i (x) B_i).";

#[derive(Debug, Error)]
pub enum MomentsError {
    #[error("asymptotic covariance is defined for type I only")]
    NotTypeOne,
    #[error("sample size must be positive")]
    ZeroSampleSize,
    #[error(transparent)]
    Riesz(#[from] RieszError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "closed-form")]
    ClosedForm,
    #[serde(rename = "fd")]
    Fd,
    #[serde(rename = "mc")]
    Mc,
    #[serde(rename = "quadrature")]
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub variant: Variant,
    pub a: f64,
    pub kappa: Vec<f64>,
    pub sigma: MatrixFile,
    pub method: Method,
    pub mean: MatrixFile,
    pub cov: MatrixFile,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_error: Option<MatrixFile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cov_error: Option<MatrixFile>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub effective_sample_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight_mean: Option<f64>,
    pub erratum_note: String,
}

impl MomentReport {
    fn new(dist: &Riesz, method: Method, mean: &Mat, cov: &Mat) -> Self {
        Self {
            variant: dist.variant(),
            a: dist.a(),
            kappa: dist.kappa().as_slice().to_vec(),
            sigma: dist.sigma().as_matrix().into(),
            method,
            mean: mean.into(),
            cov: cov.into(),
            mean_error: None,
            cov_error: None,
            effective_sample_size: None,
            weight_mean: None,
            erratum_note: ERRATUM_NOTE.to_string(),
        }
    }
}

/// What the closed forms need: the variant, `a`, `kappa`, `Sigma` and its
/// triangular factor. Decoupled from [`Riesz`] so that the moment polynomials
/// can also be evaluated below the density's shape bound (singular Wishart).
struct MomentLaw<'a> {
    variant: Variant,
    a: f64,
    kappa: &'a [f64],
    sigma: &'a Mat,
    factor: &'a Mat,
}

impl<'a> MomentLaw<'a> {
    fn of(dist: &'a Riesz) -> Self {
        Self {
            variant: dist.variant(),
            a: dist.a(),
            kappa: dist.kappa().as_slice(),
            sigma: dist.sigma().as_matrix(),
            factor: dist.scale_factor(),
        }
    }

    /// `(d_i, B_i)` for `i < m` with `d_i != 0`.
    fn b_terms(&self) -> Vec<(f64, Mat)> {
        let k = self.kappa;
        let m = k.len();
        (0..m.saturating_sub(1))
            .filter(|&i| k[i] != k[i + 1])
            .map(|i| {
                let e = SelectionMatrix::new(m, i + 1).expect("index below order");
                (k[i] - k[i + 1], self.factor.transpose() * e.projector() * self.factor)
            })
            .collect()
    }

    fn lead(&self, delta: f64) -> f64 {
        let km = self.kappa[self.kappa.len() - 1];
        match self.variant {
            Variant::TypeI => km + self.a + delta,
            Variant::TypeII => -(km - self.a) + delta,
        }
    }

    fn mean(&self, delta: f64) -> SymMatrix {
        let sign = match self.variant {
            Variant::TypeI => 1.0,
            Variant::TypeII => -1.0,
        };
        let mut out = self.sigma * self.lead(delta);
        for (d, b) in self.b_terms() {
            out += b * (sign * d);
        }
        SymMatrix::new((&out + out.transpose()) * 0.5).expect("symmetrized")
    }

    fn cov(&self, delta: f64) -> Mat {
        let m = self.sigma.nrows();
        let sigma = self.sigma;
        let mut inner = sigma.kronecker(sigma) * self.lead(delta);
        for (d, b) in self.b_terms() {
            let bb = b.kronecker(&b);
            inner += match self.variant {
                Variant::TypeI => (b.kronecker(sigma) + sigma.kronecker(&b) - bb) * d,
                Variant::TypeII => bb * -d,
            };
        }
        let n = symmetrizer(m);
        let c = &n * inner * &n;
        (&c + c.transpose()) * 0.5
    }
}

pub fn mean(dist: &Riesz) -> SymMatrix {
    MomentLaw::of(dist).mean(0.0)
}

pub fn cov(dist: &Riesz) -> Mat {
    MomentLaw::of(dist).cov(0.0)
}

/// Closed forms with `delta` added to the leading coefficient. Only used to
/// confirm that the check suite detects a wrong coefficient.
#[doc(hidden)]
pub fn corrupted_closed_form(dist: &Riesz, delta: f64) -> (SymMatrix, Mat) {
    let law = MomentLaw::of(dist);
    (law.mean(delta), law.cov(delta))
}

pub fn closed_form_report(dist: &Riesz) -> MomentReport {
    MomentReport::new(dist, Method::ClosedForm, mean(dist).as_matrix(), &cov(dist))
}

/// Moments read off the analytic gradient and Hessian at `T = 0`:
/// `E vec X = grad / i`, `E vec X vec' X = hess / i^2`.
pub fn moments_from_cf(dist: &Riesz) -> Result<(Mat, Mat), RieszError> {
    let m = dist.order();
    let d = cf_derivatives(dist, &SymMatrix::zeros(m))?;
    let mu = d.gradient.map(|z| z.im);
    let second = d.hessian.map(|z| -z.re);
    let c = second - &mu * mu.transpose();
    Ok((Mat::from_column_slice(m, m, mu.as_slice()), (&c + c.transpose()) * 0.5))
}

fn unit_direction(m: usize, r: usize, s: usize) -> SymMatrix {
    let mut h = Mat::zeros(m, m);
    h[(r, s)] += 0.5;
    h[(s, r)] += 0.5;
    SymMatrix::new(h).expect("symmetric")
}

/// Finite-difference moments: `H_rs = (e_r e_s' + e_s e_r')/2` picks out
/// `X_rs`, so first differences give `i E X_rs` and mixed second
/// differences give `-E X_rs X_uv`. Returns mean, covariance and their
/// Richardson error estimates.
pub fn moments_from_fd(dist: &Riesz, config: FdConfig) -> Result<(Mat, Mat, Mat, Mat), RieszError> {
    let m = dist.order();
    let zero = SymMatrix::zeros(m);
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|s| (s..m).map(move |r| (r, s))).collect();
    let dirs: Vec<SymMatrix> = pairs.iter().map(|&(r, s)| unit_direction(m, r, s)).collect();

    let mut mu = Mat::zeros(m, m);
    let mut mu_err = Mat::zeros(m, m);
    for (&(r, s), h) in pairs.iter().zip(&dirs) {
        let e = fd_directional(dist, &zero, Direction::First(h), config)?;
        for (i, j) in [(r, s), (s, r)] {
            mu[(i, j)] = e.value.im;
            mu_err[(i, j)] = e.error;
        }
    }
    let mut cov = Mat::zeros(m * m, m * m);
    let mut cov_err = Mat::zeros(m * m, m * m);
    for (p, (&(r, s), h1)) in pairs.iter().zip(&dirs).enumerate() {
        for (&(u, v), h2) in pairs.iter().zip(&dirs).skip(p) {
            let e = fd_directional(dist, &zero, Direction::Mixed(h1, h2), config)?;
            let c = -e.value.re - mu[(r, s)] * mu[(u, v)];
            for (i, j) in [(r, s), (s, r)] {
                for (k, l) in [(u, v), (v, u)] {
                    let (x, y) = (i + j * m, k + l * m);
                    cov[(x, y)] = c;
                    cov[(y, x)] = c;
                    cov_err[(x, y)] = e.error;
                    cov_err[(y, x)] = e.error;
                }
            }
        }
    }
    Ok((mu, cov, mu_err, cov_err))
}

pub fn fd_report(dist: &Riesz, config: FdConfig) -> Result<MomentReport, RieszError> {
    let (mu, c, mu_err, c_err) = moments_from_fd(dist, config)?;
    let mut report = MomentReport::new(dist, Method::Fd, &mu, &c);
    report.mean_error = Some((&mu_err).into());
    report.cov_error = Some((&c_err).into());
    Ok(report)
}

pub fn mc_report(dist: &Riesz, config: &McConfig) -> Result<(MomentReport, McEstimate), MomentsError> {
    let est = estimate_moments(dist, config)?;
    let mut report = MomentReport::new(dist, Method::Mc, &est.mean, &est.cov);
    report.mean_error = Some((&est.mean_se).into());
    report.cov_error = Some((&est.cov_se).into());
    report.effective_sample_size = Some(est.ess);
    report.weight_mean = Some(est.weight_mean);
    Ok((report, est))
}

pub fn quadrature_report(dist: &Riesz) -> Result<MomentReport, MomentsError> {
    let q = quadrature_m1(dist)?;
    let mut report = MomentReport::new(
        dist,
        Method::Quadrature,
        &Mat::from_element(1, 1, q.mean),
        &Mat::from_element(1, 1, q.variance),
    );
    report.weight_mean = Some(q.normalization);
    Ok(report)
}

/// `W_m(n, Sigma)` as the type I law with `a = n/2`, `kappa = 0` and scale
/// `2 Sigma`: mean `n Sigma`, covariance `2n N(Sigma (x) Sigma)`.
pub fn wishart_moments(n: u32, sigma: &PosDefMatrix) -> Result<MomentReport, MomentsError> {
    if n == 0 {
        return Err(MomentsError::ZeroSampleSize);
    }
    let m = sigma.order();
    let a = f64::from(n) / 2.0;
    let scale = sigma.scale(2.0).map_err(RieszError::from)?;
    let kappa = vec![0.0; m];
    let factor = scale.cholesky().transpose();
    // for n < m the law is singular and has no density, but the moments are
    // the same polynomials in a
    let law = MomentLaw {
        variant: Variant::TypeI,
        a,
        kappa: &kappa,
        sigma: scale.as_matrix(),
        factor: &factor,
    };
    Ok(MomentReport {
        variant: Variant::TypeI,
        a,
        kappa: kappa.clone(),
        sigma: scale.as_matrix().into(),
        method: Method::ClosedForm,
        mean: law.mean(0.0).as_matrix().into(),
        cov: (&law.cov(0.0)).into(),
        mean_error: None,
        cov_error: None,
        effective_sample_size: None,
        weight_mean: None,
        erratum_note: ERRATUM_NOTE.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCov {
    pub cov: Mat,
    pub rank: usize,
}

/// Covariance of the limiting normal law of `n^{1/2}(vec S(n) - ...)` as
/// displayed for type I samples: `cov / n`, with its numerical rank.
pub fn asymptotic_cov(dist: &Riesz, n: u32) -> Result<AsymptoticCov, MomentsError> {
    if dist.variant() != Variant::TypeI {
        return Err(MomentsError::NotTypeOne);
    }
    if n == 0 {
        return Err(MomentsError::ZeroSampleSize);
    }
    let c = cov(dist) / f64::from(n);
    let rank = numerical_rank(&c, RANK_TOL);
    Ok(AsymptoticCov { cov: c, rank })
}

/// `vec` of the mean as a column.
pub fn mean_vec(dist: &Riesz) -> nalgebra::DVector<f64> {
    vec(mean(dist).as_matrix())
}
