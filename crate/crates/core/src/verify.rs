//! Independent numerical oracles: a Wishart-type proposal sampler with
//! self-normalized importance weights, and one-dimensional adaptive
//! quadrature for the univariate case.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::matcore::{sqrt_psd, vec, Mat, MatError, PosDefMatrix, SymMatrix};
use crate::riesz::{Riesz, RieszError, RieszParams, Variant};
use crate::specialfn::WeightVector;

/// Number of jackknife blocks, independent of the worker count.
pub const DEFAULT_BLOCKS: usize = 100;
/// Below this effective-sample fraction a type II run is retried with a
/// shifted proposal.
pub const ESS_RETRY_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("need at least two jackknife blocks and one sample per block")]
    TooFewSamples,
    #[error("proposal shape {0} is outside the sampler's domain")]
    ProposalShape(f64),
    #[error("importance weights are all zero or non-finite")]
    DegenerateWeights,
    #[error("quadrature did not reach tolerance {tol} (estimated error {error})")]
    Quadrature { tol: f64, error: f64 },
    #[error("quadrature is only available for order 1")]
    NotUnivariate,
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Riesz(#[from] RieszError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `A A'/m + I/2` with standard normal `A`.
pub fn random_pos_def<R: Rng + ?Sized>(m: usize, rng: &mut R) -> PosDefMatrix {
    let a = Mat::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = &a * a.transpose() / m as f64 + Mat::identity(m, m) * 0.5;
    PosDefMatrix::from_matrix(s).expect("A A'/m + I/2 is positive definite")
}

/// Symmetric matrix with independent `N(0, scale^2)` entries on and above the diagonal.
pub fn random_symmetric<R: Rng + ?Sized>(m: usize, scale: f64, rng: &mut R) -> SymMatrix {
    let mut t = Mat::zeros(m, m);
    for c in 0..m {
        for r in c..m {
            let z: f64 = rng.sample(StandardNormal);
            t[(r, c)] = scale * z;
            t[(c, r)] = scale * z;
        }
    }
    SymMatrix::new(t).expect("constructed symmetric")
}

/// Density proportional to `etr(-Sigma^{-1} X) |X|^{a-(m+1)/2}`, i.e. the
/// Riesz law with zero weight. Sampled through the Bartlett decomposition.
#[derive(Debug, Clone)]
pub struct Proposal {
    law: Riesz,
    root: Mat,
    chi: Vec<ChiSquared<f64>>,
}

impl Proposal {
    pub fn new(a: f64, sigma: &PosDefMatrix) -> Result<Self, VerifyError> {
        let m = sigma.order();
        let law = RieszParams::new(Variant::TypeI, a, WeightVector::zeros(m), sigma.clone())
            .validate()
            .map_err(|_| VerifyError::ProposalShape(a))?;
        let chi = (0..m)
            .map(|j| ChiSquared::new(2.0 * a - j as f64).map_err(|_| VerifyError::ProposalShape(a)))
            .collect::<Result<_, _>>()?;
        let root = sqrt_psd(sigma)?.as_matrix().clone();
        Ok(Self { law, root, chi })
    }

    pub fn a(&self) -> f64 {
        self.law.a()
    }

    pub fn mean(&self) -> Mat {
        self.law.sigma().as_matrix() * self.law.a()
    }

    pub fn log_density(&self, x: &PosDefMatrix) -> Result<f64, RieszError> {
        self.law.log_density(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PosDefMatrix, MatError> {
        let m = self.root.nrows();
        let mut l = Mat::zeros(m, m);
        for j in 0..m {
            l[(j, j)] = self.chi[j].sample(rng).sqrt();
            for i in (j + 1)..m {
                l[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let x = &self.root * (&l * l.transpose() * 0.5) * &self.root;
        PosDefMatrix::from_matrix((&x + x.transpose()) * 0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSample {
    pub x: PosDefMatrix,
    pub log_proposal_density: f64,
}

/// One draw from the zero-weight law with shape `a` and scale `sigma`.
pub fn sample_proposal<R: Rng + ?Sized>(
    a: f64,
    sigma: &PosDefMatrix,
    rng: &mut R,
) -> Result<ProposalSample, VerifyError> {
    let p = Proposal::new(a, sigma)?;
    let x = p.sample(rng)?;
    let log_proposal_density = p.log_density(&x)?;
    Ok(ProposalSample { x, log_proposal_density })
}

/// `target(X) / proposal(X)`, both normalized.
pub fn importance_weight(
    target: &Riesz,
    proposal: &Proposal,
    x: &PosDefMatrix,
) -> Result<f64, RieszError> {
    Ok((target.log_density(x)? - proposal.log_density(x)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub blocks: usize,
    /// Block `b` draws from stream `stream_offset + b`.
    pub stream_offset: u64,
    /// `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(seed: u64, n_samples: usize) -> Self {
        Self { seed, n_samples, blocks: DEFAULT_BLOCKS, stream_offset: 0, workers: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub n_samples: usize,
    pub blocks: usize,
    pub proposal_a: f64,
    pub mean: Mat,
    pub mean_se: Mat,
    /// Covariance of `vec X`, `m^2 x m^2`.
    pub cov: Mat,
    pub cov_se: Mat,
    pub ess: f64,
    /// Plain average of the weights; its expectation is exactly one.
    pub weight_mean: f64,
    pub weight_mean_se: f64,
}

impl McEstimate {
    pub fn ess_fraction(&self) -> f64 {
        self.ess / self.n_samples as f64
    }
}

#[derive(Debug, Clone)]
struct BlockSums {
    n: usize,
    w: f64,
    w2: f64,
    wx: DVector<f64>,
    wxx: Mat,
}

impl BlockSums {
    fn zeros(d: usize) -> Self {
        Self { n: 0, w: 0.0, w2: 0.0, wx: DVector::zeros(d), wxx: Mat::zeros(d, d) }
    }

    fn add(&mut self, other: &BlockSums) {
        self.n += other.n;
        self.w += other.w;
        self.w2 += other.w2;
        self.wx += &other.wx;
        self.wxx += &other.wxx;
    }

    fn sub(&self, other: &BlockSums) -> BlockSums {
        BlockSums {
            n: self.n - other.n,
            w: self.w - other.w,
            w2: self.w2 - other.w2,
            wx: &self.wx - &other.wx,
            wxx: &self.wxx - &other.wxx,
        }
    }

    /// Self-normalized mean and covariance of the centred vector, plus the
    /// plain weight average.
    fn estimate(&self) -> (DVector<f64>, Mat, f64) {
        let mu = &self.wx / self.w;
        let cov = &self.wxx / self.w - &mu * mu.transpose();
        (mu, cov, self.w / self.n as f64)
    }
}

fn run_block(
    target: &Riesz,
    proposal: &Proposal,
    centre: &DVector<f64>,
    seed: u64,
    stream: u64,
    count: usize,
) -> Result<BlockSums, VerifyError> {
    let mut rng = stream_rng(seed, stream);
    let mut sums = BlockSums::zeros(centre.len());
    for _ in 0..count {
        let x = proposal.sample(&mut rng)?;
        let w = importance_weight(target, proposal, &x)?;
        if !w.is_finite() {
            return Err(VerifyError::DegenerateWeights);
        }
        let v = vec(x.as_matrix()) - centre;
        sums.n += 1;
        sums.w += w;
        sums.w2 += w * w;
        sums.wx += &v * w;
        sums.wxx += &v * v.transpose() * w;
    }
    Ok(sums)
}

fn sample_with(
    target: &Riesz,
    proposal: &Proposal,
    config: &McConfig,
) -> Result<McEstimate, VerifyError> {
    let b = config.blocks;
    if b < 2 || config.n_samples < b {
        return Err(VerifyError::TooFewSamples);
    }
    let m = target.order();
    let centre = vec(&proposal.mean());
    let base = config.n_samples / b;
    let extra = config.n_samples % b;
    let work = || -> Result<Vec<BlockSums>, VerifyError> {
        (0..b)
            .into_par_iter()
            .map(|i| {
                let stream = config.stream_offset + i as u64;
                run_block(target, proposal, &centre, config.seed, stream, base + usize::from(i < extra))
            })
            .collect()
    };
    let blocks = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| VerifyError::Pool(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let mut total = BlockSums::zeros(m * m);
    for s in &blocks {
        total.add(s);
    }
    if !(total.w > 0.0) {
        return Err(VerifyError::DegenerateWeights);
    }
    let (mu, cov, wbar) = total.estimate();

    // delete-one-block jackknife
    let loo: Vec<_> = blocks.iter().map(|s| total.sub(s).estimate()).collect();
    let bf = b as f64;
    let mu_bar = loo.iter().fold(DVector::zeros(m * m), |acc, e| acc + &e.0) / bf;
    let cov_bar = loo.iter().fold(Mat::zeros(m * m, m * m), |acc, e| acc + &e.1) / bf;
    let w_bar = loo.iter().map(|e| e.2).sum::<f64>() / bf;
    let factor = (bf - 1.0) / bf;
    let mut mu_var = DVector::<f64>::zeros(m * m);
    let mut cov_var = Mat::zeros(m * m, m * m);
    let mut w_var = 0.0;
    for (em, ec, ew) in &loo {
        mu_var += (em - &mu_bar).map(|x| x * x);
        cov_var += (ec - &cov_bar).map(|x| x * x);
        w_var += (ew - w_bar).powi(2);
    }

    let mean = Mat::from_column_slice(m, m, (&mu + &centre).as_slice());
    let mean_se = Mat::from_column_slice(m, m, (mu_var * factor).map(f64::sqrt).as_slice());
    Ok(McEstimate {
        n_samples: total.n,
        blocks: b,
        proposal_a: proposal.a(),
        mean,
        mean_se,
        cov,
        cov_se: (cov_var * factor).map(f64::sqrt),
        ess: total.w * total.w / total.w2,
        weight_mean: wbar,
        weight_mean_se: (w_var * factor).sqrt(),
    })
}

/// Importance-sampling moments of `target`. The proposal shape is `a`; a type
/// II run with too small an effective sample size is repeated with shape
/// `a - k_1`.
pub fn estimate_moments(target: &Riesz, config: &McConfig) -> Result<McEstimate, VerifyError> {
    let proposal = Proposal::new(target.a(), target.sigma())?;
    let first = sample_with(target, &proposal, config)?;
    let shifted = target.a() - target.kappa().first();
    if target.variant() == Variant::TypeII
        && first.ess_fraction() < ESS_RETRY_FRACTION
        && shifted != target.a()
    {
        let retry = Proposal::new(shifted, target.sigma())?;
        return sample_with(target, &retry, config);
    }
    Ok(first)
}

// Kronrod 15-point nodes and weights at their tabulated precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment { lo, hi, value: kronrod * h, error: ((kronrod - gauss) * h).abs() }
}

/// Globally adaptive Gauss-Kronrod (7, 15) on `[lo, hi]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, VerifyError> {
    const MAX_SEGMENTS: usize = 4000;
    let mut segs = vec![gk15(&f, lo, hi)];
    loop {
        let error: f64 = segs.iter().map(|s| s.error).sum();
        let value: f64 = segs.iter().map(|s| s.value).sum();
        if error <= tol {
            return Ok(value);
        }
        if segs.len() >= MAX_SEGMENTS || !error.is_finite() {
            return Err(VerifyError::Quadrature { tol, error });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.lo + s.hi);
        segs.push(gk15(&f, s.lo, mid));
        segs.push(gk15(&f, mid, s.hi));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureMoments {
    pub normalization: f64,
    pub mean: f64,
    pub variance: f64,
}

pub const QUADRATURE_TOL: f64 = 1e-10;

/// Normalization, mean and variance of a univariate law by quadrature of its
/// density over `(0, inf)`, mapped to `(0, 1)` with `x = s u / (1 - u)`.
pub fn quadrature_m1(dist: &Riesz) -> Result<QuadratureMoments, VerifyError> {
    if dist.order() != 1 {
        return Err(VerifyError::NotUnivariate);
    }
    let s = dist.sigma().as_matrix()[(0, 0)];
    let moment = |p: i32| {
        integrate(
            |u| {
                if u <= 0.0 || u >= 1.0 {
                    return 0.0;
                }
                let x = s * u / (1.0 - u);
                let jac = s / ((1.0 - u) * (1.0 - u));
                match PosDefMatrix::from_row_slice(1, &[x]) {
                    Ok(xm) => dist.density(&xm).map(|d| d * x.powi(p) * jac).unwrap_or(0.0),
                    Err(_) => 0.0,
                }
            },
            0.0,
            1.0,
            QUADRATURE_TOL,
        )
    };
    let normalization = moment(0)?;
    let mean = moment(1)?;
    let second = moment(2)?;
    Ok(QuadratureMoments { normalization, mean, variance: second - mean * mean })
}
