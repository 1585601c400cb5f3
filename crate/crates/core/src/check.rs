//! The verification suite behind `riesz check`: each record compares a closed
//! form against an independent oracle at a stated tolerance.

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cfderiv::{
    cf_derivatives, directional_gradient, fd_directional, hessian_bilinear, Direction, FdConfig,
};
use crate::matcore::{commutation_matrix, Mat, PosDefMatrix};
use crate::moments::{asymptotic_cov, corrupted_closed_form, cov, mean, moments_from_cf, wishart_moments};
use crate::riesz::{Riesz, RieszParams, Variant};
use crate::specialfn::{
    gen_pochhammer, mv_gamma, mv_gamma_weighted, mv_gamma_weighted_neg, ExponentVector,
    GeneralizedPower, WeightVector,
};
use crate::verify::{
    estimate_moments, quadrature_m1, random_pos_def, random_symmetric, stream_rng, McConfig,
    ESS_RETRY_FRACTION,
};

pub const GAMMA_TOL: f64 = 1e-12;
pub const GPOWER_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const HESSIAN_TOL: f64 = 1e-4;
pub const MEAN_TOL: f64 = 1e-6;
pub const COV_TOL: f64 = 1e-5;
pub const WISHART_TOL: f64 = 1e-12;
pub const QUAD_NORM_TOL: f64 = 1e-8;
pub const QUAD_MOMENT_TOL: f64 = 1e-7;
pub const MC_Z: f64 = 3.0;
pub const FULL_SAMPLES: usize = 200_000;
pub const QUICK_SAMPLES: usize = 100_000;

/// Stream ranges reserved for parameter generation; MC blocks use the rest.
const PARAM_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: Value,
    pub closed_form: f64,
    pub oracle: f64,
    /// Scaled discrepancy compared with `tolerance`: relative error, or a
    /// z-score for Monte Carlo records.
    pub discrepancy: f64,
    pub tolerance: f64,
    pub status: Status,
}

impl CheckRecord {
    fn new(name: &str, inputs: Value, closed_form: f64, oracle: f64, discrepancy: f64, tolerance: f64) -> Self {
        let status = if discrepancy <= tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.to_string(), inputs, closed_form, oracle, discrepancy, tolerance, status }
    }

    fn error(name: &str, inputs: Value, message: String) -> Self {
        let mut inputs = inputs;
        inputs["error"] = Value::String(message);
        Self {
            name: name.to_string(),
            inputs,
            closed_form: f64::NAN,
            oracle: f64::NAN,
            discrepancy: f64::INFINITY,
            tolerance: 0.0,
            status: Status::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub scale: Scale,
    pub n_samples: usize,
    pub passed: usize,
    pub warned: usize,
    pub failed: usize,
    pub checks: Vec<CheckRecord>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    pub scale: Scale,
    pub n_samples: Option<usize>,
    pub workers: Option<usize>,
    /// Perturbs the leading moment coefficient so that the suite must fail.
    pub inject_fault: bool,
}

impl CheckConfig {
    pub fn new(seed: u64, scale: Scale) -> Self {
        Self { seed, scale, n_samples: None, workers: None, inject_fault: false }
    }

    pub fn samples(&self) -> usize {
        self.n_samples.unwrap_or(match self.scale {
            Scale::Quick => QUICK_SAMPLES,
            Scale::Full => FULL_SAMPLES,
        })
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Largest `|a - b| / max(1, |b|)` over all entries; returns the offending pair.
fn worst_entry(closed: &Mat, oracle: &Mat) -> (f64, f64, f64) {
    let mut worst = (0.0, 0.0, 0.0);
    for (c, o) in closed.iter().zip(oracle.iter()) {
        let d = (c - o).abs() / o.abs().max(1.0);
        if d > worst.0 || d.is_nan() {
            worst = (d, *c, *o);
        }
    }
    worst
}

fn kappa(k: &[f64]) -> WeightVector {
    WeightVector::new(k.to_vec()).expect("static weight vectors are valid")
}

fn dist_inputs(d: &Riesz, sigma_label: &str) -> Value {
    json!({
        "variant": d.variant(),
        "a": d.a(),
        "kappa": d.kappa().as_slice(),
        "m": d.order(),
        "sigma": sigma_label,
    })
}

/// One point of the moment grid.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub dist: Riesz,
    pub sigma_label: String,
}

/// Two weight vectors per order and both variants, with `Sigma = I` and a
/// random positive-definite `Sigma`. Type I uses `a = (m-1)/2 + 1`; type II
/// uses `a = (m-1)/2 + 2 k_1 + 3/2`, which keeps the importance weights square
/// integrable under the zero-weight proposal.
pub fn moment_grid(seed: u64, orders: &[usize], kappas_per_order: usize) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &m in orders {
        let all: Vec<Vec<f64>> = match m {
            1 => vec![vec![1.0], vec![2.0]],
            2 => vec![vec![2.0, 1.0], vec![1.0, 0.0]],
            3 => vec![vec![2.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]],
            _ => vec![(0..m).map(|i| (m - i - 1) as f64).collect()],
        };
        let random = random_pos_def(m, &mut stream_rng(seed, PARAM_STREAM + m as u64));
        for k in all.iter().take(kappas_per_order) {
            for variant in [Variant::TypeI, Variant::TypeII] {
                let base = (m as f64 - 1.0) / 2.0;
                let a = match variant {
                    Variant::TypeI => base + 1.0,
                    Variant::TypeII => base + 2.0 * k[0] + 1.5,
                };
                for (label, sigma) in [("identity", PosDefMatrix::identity(m)), ("random", random.clone())] {
                    let dist = RieszParams::new(variant, a, kappa(k), sigma)
                        .validate()
                        .expect("grid parameters are inside the domain");
                    out.push(GridPoint { dist, sigma_label: label.to_string() });
                }
            }
        }
    }
    out
}

/// `Gamma_m[a, kappa] = [a]_kappa Gamma_m[a]` and
/// `Gamma_m[a, -kappa] = (-1)^k Gamma_m[a] / [-a + (m-1)/2 + 1]_kappa`.
pub fn gamma_identity_checks(scale: Scale) -> Vec<CheckRecord> {
    let kappas: Vec<Vec<f64>> = vec![
        vec![0.0],
        vec![1.0],
        vec![3.0],
        vec![2.0, 0.0],
        vec![2.0, 1.0],
        vec![3.0, 3.0],
        vec![2.0, 1.0, 0.0],
        vec![3.0, 2.0, 2.0],
        vec![1.0, 1.0, 1.0, 0.0],
        vec![4.0, 2.0, 1.0, 1.0],
    ];
    let offsets: &[f64] = match scale {
        Scale::Quick => &[0.3, 2.75],
        Scale::Full => &[0.3, 0.9, 1.6, 2.75, 4.1, 6.5],
    };
    let mut out = Vec::new();
    for k in &kappas {
        let m = k.len();
        let w = kappa(k);
        let total = w.total();
        for &off in offsets {
            let inputs = json!({"m": m, "kappa": k, "offset": off});
            // positive weight: a > (m-1)/2 - k_m
            let a = (m as f64 - 1.0) / 2.0 + off;
            let lhs = mv_gamma_weighted(a, &w);
            let rhs = gen_pochhammer(a, &w).and_then(|p| Ok(p * mv_gamma(a, m)?));
            out.push(match (lhs, rhs) {
                (Ok(l), Ok(r)) => CheckRecord::new("gamma_weighted_pochhammer", inputs.clone(), l, r, rel(l, r), GAMMA_TOL),
                (Err(e), _) | (_, Err(e)) => CheckRecord::error("gamma_weighted_pochhammer", inputs.clone(), e.to_string()),
            });
            // negative weight: a > (m-1)/2 + k_1
            let a = (m as f64 - 1.0) / 2.0 + w.first() + off;
            let lhs = mv_gamma_weighted_neg(a, &w);
            let rhs = gen_pochhammer(-a + (m as f64 - 1.0) / 2.0 + 1.0, &w)
                .and_then(|p| Ok(if total % 2.0 == 0.0 { 1.0 } else { -1.0 } * mv_gamma(a, m)? / p));
            out.push(match (lhs, rhs) {
                (Ok(l), Ok(r)) => CheckRecord::new("gamma_weighted_neg_pochhammer", inputs, l, r, rel(l, r), GAMMA_TOL),
                (Err(e), _) | (_, Err(e)) => CheckRecord::error("gamma_weighted_neg_pochhammer", inputs, e.to_string()),
            });
        }
    }
    out
}

fn random_weights(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut k: Vec<f64> = (0..m).map(|_| rng.random_range(0..4) as f64).collect();
    k.sort_by(|a, b| b.total_cmp(a));
    k
}

fn lower_triangular(m: usize, rng: &mut impl Rng) -> Mat {
    let mut b = random_symmetric(m, 1.0, rng).into_matrix();
    for c in 0..m {
        b[(c, c)] = b[(c, c)].abs() + 0.5;
        for r in 0..c {
            b[(r, c)] = 0.0;
        }
    }
    b
}

/// Worst relative error of the generalized-power identities over random
/// positive-definite matrices of order 1 to 5. The inverse identity is
/// exercised on diagonal matrices only, where it holds.
pub fn gpower_checks(seed: u64, scale: Scale) -> Vec<CheckRecord> {
    let n = match scale {
        Scale::Quick => 40,
        Scale::Full => 200,
    };
    let mut rng = stream_rng(seed, PARAM_STREAM + 100);
    let mut worst: [(f64, f64, f64); 5] = [(0.0, 0.0, 0.0); 5];
    let mut note = |slot: usize, l: f64, r: f64| {
        let d = rel(l, r);
        if d > worst[slot].0 || d.is_nan() {
            worst[slot] = (d, l, r);
        }
    };
    for i in 0..n {
        let m = 1 + i % 5;
        let a = random_pos_def(m, &mut rng);
        let k = ExponentVector::new(random_weights(m, &mut rng));
        let t = ExponentVector::new(random_weights(m, &mut rng));
        let q = a.gpower(&k).expect("order matches");
        let c: f64 = rng.random_range(0.2..3.0);
        let p: f64 = rng.random_range(-1.5..1.5);
        let total: f64 = k.as_slice().iter().sum();
        note(0, a.scale(c).unwrap().gpower(&k).unwrap(), c.powf(total) * q);
        note(1, a.gpower(&k.add(&t)).unwrap(), q * a.gpower(&t).unwrap());
        note(
            2,
            a.gpower(&k.add(&ExponentVector::constant(m, p))).unwrap(),
            (p * a.ln_det()).exp() * q,
        );
        let b = lower_triangular(m, &mut rng);
        let bab = PosDefMatrix::from_matrix(&b * a.as_matrix() * b.transpose()).unwrap();
        let bb = PosDefMatrix::from_matrix(&b * b.transpose()).unwrap();
        note(3, bab.gpower(&k).unwrap(), bb.gpower(&k).unwrap() * q);
        let d = PosDefMatrix::from_matrix(Mat::from_diagonal(&a.as_matrix().diagonal())).unwrap();
        note(4, d.inverse().gpower(&k).unwrap(), 1.0 / d.gpower(&k).unwrap());
    }
    let names = [
        "gpower_scalar_multiple",
        "gpower_exponent_sum",
        "gpower_determinant_shift",
        "gpower_lower_triangular_congruence",
        "gpower_inverse_diagonal",
    ];
    names
        .iter()
        .zip(worst)
        .map(|(name, (d, l, r))| CheckRecord::new(name, json!({"matrices": n, "max_order": 5}), l, r, d, GPOWER_TOL))
        .collect()
}

/// Random directional derivatives against central differences of `char_fn`.
pub fn derivative_checks(seed: u64, scale: Scale) -> Vec<CheckRecord> {
    let n = match scale {
        Scale::Quick => 24,
        Scale::Full => 120,
    };
    let mut rng = stream_rng(seed, PARAM_STREAM + 200);
    let mut g_worst = (0.0, 0.0, 0.0);
    let mut h_worst = (0.0, 0.0, 0.0);
    let mut errors = Vec::new();
    for i in 0..n {
        let m = 1 + i % 3;
        let variant = if (i / 3) % 2 == 0 { Variant::TypeI } else { Variant::TypeII };
        let k = random_weights(m, &mut rng);
        let base = (m as f64 - 1.0) / 2.0;
        let bound = match variant {
            Variant::TypeI => base - k[m - 1],
            Variant::TypeII => base + k[0],
        };
        let a = bound + rng.random_range(0.25..2.5);
        let sigma = random_pos_def(m, &mut rng);
        let t = random_symmetric(m, 0.4, &mut rng);
        let h1 = random_symmetric(m, 1.0, &mut rng);
        let h2 = random_symmetric(m, 1.0, &mut rng);
        let dist = match RieszParams::new(variant, a, kappa(&k), sigma).validate() {
            Ok(d) => d,
            Err(e) => {
                errors.push(e.to_string());
                continue;
            }
        };
        let run = || -> Result<_, crate::riesz::RieszError> {
            let d = cf_derivatives(&dist, &t)?;
            let g = directional_gradient(&d.gradient, &h1);
            let h = hessian_bilinear(&d.hessian, &h1, &h2);
            let fg = fd_directional(&dist, &t, Direction::First(&h1), FdConfig::default())?.value;
            let fh = fd_directional(&dist, &t, Direction::Mixed(&h1, &h2), FdConfig::default())?.value;
            Ok((g, h, fg, fh))
        };
        match run() {
            Ok((g, h, fg, fh)) => {
                let dg = (g - fg).norm() / fg.norm().max(1.0);
                let dh = (h - fh).norm() / fh.norm().max(1.0);
                if dg > g_worst.0 || dg.is_nan() {
                    g_worst = (dg, g.norm(), fg.norm());
                }
                if dh > h_worst.0 || dh.is_nan() {
                    h_worst = (dh, h.norm(), fh.norm());
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    let inputs = json!({"cases": n, "orders": [1, 2, 3]});
    if let Some(e) = errors.into_iter().next() {
        return vec![CheckRecord::error("cf_derivatives_vs_fd", inputs, e)];
    }
    vec![
        CheckRecord::new("cf_gradient_vs_fd", inputs.clone(), g_worst.1, g_worst.2, g_worst.0, GRADIENT_TOL),
        CheckRecord::new("cf_hessian_vs_fd", inputs, h_worst.1, h_worst.2, h_worst.0, HESSIAN_TOL),
    ]
}

fn closed_form(d: &Riesz, inject_fault: bool) -> (Mat, Mat) {
    if inject_fault {
        let (mu, c) = corrupted_closed_form(d, 0.5);
        (mu.into_matrix(), c)
    } else {
        (mean(d).into_matrix(), cov(d))
    }
}

/// Closed-form moments against the analytic derivatives at `T = 0`.
pub fn closed_form_checks(grid: &[GridPoint], inject_fault: bool) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for p in grid {
        let inputs = dist_inputs(&p.dist, &p.sigma_label);
        match moments_from_cf(&p.dist) {
            Ok((mu, c)) => {
                let (cm, cc) = closed_form(&p.dist, inject_fault);
                let (dm, lm, rm) = worst_entry(&cm, &mu);
                let (dc, lc, rc) = worst_entry(&cc, &c);
                out.push(CheckRecord::new("mean_vs_cf_gradient", inputs.clone(), lm, rm, dm, MEAN_TOL));
                out.push(CheckRecord::new("cov_vs_cf_hessian", inputs, lc, rc, dc, COV_TOL));
            }
            Err(e) => out.push(CheckRecord::error("mean_vs_cf_gradient", inputs, e.to_string())),
        }
    }
    out
}

pub fn wishart_checks(seed: u64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for m in 1..=4 {
        let sigma = random_pos_def(m, &mut stream_rng(seed, PARAM_STREAM + 300 + m as u64));
        let s = sigma.as_matrix();
        for n in [1u32, 5, 20] {
            let inputs = json!({"m": m, "n": n});
            let report = match wishart_moments(n, &sigma) {
                Ok(r) => r,
                Err(e) => {
                    out.push(CheckRecord::error("wishart_reduction", inputs, e.to_string()));
                    continue;
                }
            };
            let nf = f64::from(n);
            let mu_ref = s * nf;
            let cov_ref = (Mat::identity(m * m, m * m) + commutation_matrix(m, m)) * s.kronecker(s) * nf;
            let mu = report.mean.to_matrix().expect("well-formed");
            let c = report.cov.to_matrix().expect("well-formed");
            let (dm, lm, rm) = worst_entry(&mu, &mu_ref);
            let (dc, lc, rc) = worst_entry(&c, &cov_ref);
            out.push(CheckRecord::new("wishart_mean", inputs.clone(), lm, rm, dm, WISHART_TOL));
            out.push(CheckRecord::new("wishart_cov", inputs, lc, rc, dc, WISHART_TOL));
        }
    }
    out
}

pub fn quadrature_checks() -> Vec<CheckRecord> {
    let points: [(Variant, f64, f64, f64); 8] = [
        (Variant::TypeI, 2.0, 1.0, 1.0),
        (Variant::TypeI, 2.0, 1.0, 2.0),
        (Variant::TypeI, 0.6, 0.0, 0.5),
        (Variant::TypeI, 1.3, 2.5, 1.7),
        (Variant::TypeII, 3.0, 1.0, 1.0),
        (Variant::TypeII, 4.5, 2.0, 0.8),
        (Variant::TypeII, 2.2, 0.5, 3.0),
        (Variant::TypeII, 5.0, 0.0, 1.2),
    ];
    let mut out = Vec::new();
    for (variant, a, k, s) in points {
        let inputs = json!({"variant": variant, "a": a, "kappa": [k], "sigma": s});
        let dist = RieszParams::new(variant, a, kappa(&[k]), PosDefMatrix::from_row_slice(1, &[s]).unwrap())
            .validate()
            .expect("static quadrature points are valid");
        match quadrature_m1(&dist) {
            Ok(q) => {
                let mu = mean(&dist).as_matrix()[(0, 0)];
                let var = cov(&dist)[(0, 0)];
                out.push(CheckRecord::new("quadrature_normalization", inputs.clone(), 1.0, q.normalization, (q.normalization - 1.0).abs(), QUAD_NORM_TOL));
                out.push(CheckRecord::new("quadrature_mean", inputs.clone(), mu, q.mean, (q.mean - mu).abs(), QUAD_MOMENT_TOL));
                out.push(CheckRecord::new("quadrature_variance", inputs, var, q.variance, (q.variance - var).abs(), QUAD_MOMENT_TOL));
            }
            Err(e) => out.push(CheckRecord::error("quadrature_normalization", inputs, e.to_string())),
        }
    }
    out
}

/// Largest `|estimate - closed| / se` over the unique entries of the mean and
/// of the covariance of `vec X`.
pub fn mc_z_scores(est_mean: &Mat, se_mean: &Mat, est_cov: &Mat, se_cov: &Mat, mu: &Mat, c: &Mat) -> ((f64, f64, f64), (f64, f64, f64)) {
    let m = mu.nrows();
    let z = |e: f64, s: f64, r: f64| {
        if s > 0.0 {
            (e - r).abs() / s
        } else if e == r {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let mut wm = (0.0, 0.0, 0.0);
    for j in 0..m {
        for i in j..m {
            let v = z(est_mean[(i, j)], se_mean[(i, j)], mu[(i, j)]);
            if v > wm.0 || v.is_nan() {
                wm = (v, mu[(i, j)], est_mean[(i, j)]);
            }
        }
    }
    // unique entries of cov(vec X): pairs of lower-triangle positions
    let idx: Vec<usize> = (0..m).flat_map(|s| (s..m).map(move |r| r + s * m)).collect();
    let mut wc = (0.0, 0.0, 0.0);
    for (p, &x) in idx.iter().enumerate() {
        for &y in &idx[p..] {
            let v = z(est_cov[(x, y)], se_cov[(x, y)], c[(x, y)]);
            if v > wc.0 || v.is_nan() {
                wc = (v, c[(x, y)], est_cov[(x, y)]);
            }
        }
    }
    (wm, wc)
}

/// Importance-sampling moments against the closed forms, plus the weight
/// normalization and the effective-sample-size floor.
pub fn mc_checks(grid: &[GridPoint], config: &CheckConfig) -> Vec<CheckRecord> {
    let n = config.samples();
    let mut out = Vec::new();
    for (i, p) in grid.iter().enumerate() {
        let mut inputs = dist_inputs(&p.dist, &p.sigma_label);
        inputs["n_samples"] = json!(n);
        let mut mc = McConfig::new(config.seed, n);
        mc.stream_offset = (i as u64) * 1024;
        mc.workers = config.workers;
        let est = match estimate_moments(&p.dist, &mc) {
            Ok(e) => e,
            Err(e) => {
                out.push(CheckRecord::error("mc_mean", inputs, e.to_string()));
                continue;
            }
        };
        inputs["proposal_a"] = json!(est.proposal_a);
        let (cm, cc) = closed_form(&p.dist, config.inject_fault);
        let (wm, wc) = mc_z_scores(&est.mean, &est.mean_se, &est.cov, &est.cov_se, &cm, &cc);
        let wz = (est.weight_mean - 1.0).abs() / est.weight_mean_se;
        out.push(CheckRecord::new("mc_mean", inputs.clone(), wm.1, wm.2, wm.0, MC_Z));
        out.push(CheckRecord::new("mc_cov", inputs.clone(), wc.1, wc.2, wc.0, MC_Z));
        out.push(CheckRecord::new("mc_weight_mean", inputs.clone(), 1.0, est.weight_mean, wz, MC_Z));
        let frac = est.ess_fraction();
        let mut ess = CheckRecord::new("mc_effective_sample_size", inputs, ESS_RETRY_FRACTION, frac, 0.0, 0.0);
        ess.discrepancy = (ESS_RETRY_FRACTION - frac).max(0.0);
        ess.status = if frac >= ESS_RETRY_FRACTION { Status::Pass } else { Status::Fail };
        out.push(ess);
    }
    out
}

pub fn rank_checks(seed: u64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for m in 1..=5usize {
        let mut rng = stream_rng(seed, PARAM_STREAM + 400 + m as u64);
        let sigma = random_pos_def(m, &mut rng);
        let k = random_weights(m, &mut rng);
        let a = (m as f64 - 1.0) / 2.0 + 1.0;
        let inputs = json!({"m": m, "kappa": k, "a": a, "n": 10});
        let dist = RieszParams::new(Variant::TypeI, a, kappa(&k), sigma).validate().expect("valid");
        match asymptotic_cov(&dist, 10) {
            Ok(ac) => {
                let expected = (m * (m + 1) / 2) as f64;
                let got = ac.rank as f64;
                out.push(CheckRecord::new("asymptotic_cov_rank", inputs, expected, got, (expected - got).abs(), 0.0));
            }
            Err(e) => out.push(CheckRecord::error("asymptotic_cov_rank", inputs, e.to_string())),
        }
    }
    out
}

pub fn run_checks(config: &CheckConfig) -> CheckReport {
    let (orders, kappas): (&[usize], usize) = match config.scale {
        Scale::Quick => (&[1, 2], 1),
        Scale::Full => (&[1, 2, 3], 2),
    };
    let grid = moment_grid(config.seed, orders, kappas);
    let mut checks = Vec::new();
    checks.extend(gamma_identity_checks(config.scale));
    checks.extend(gpower_checks(config.seed, config.scale));
    checks.extend(derivative_checks(config.seed, config.scale));
    checks.extend(closed_form_checks(&grid, config.inject_fault));
    checks.extend(wishart_checks(config.seed));
    checks.extend(quadrature_checks());
    checks.extend(mc_checks(&grid, config));
    checks.extend(rank_checks(config.seed));
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    CheckReport {
        seed: config.seed,
        scale: config.scale,
        n_samples: config.samples(),
        passed: count(Status::Pass),
        warned: count(Status::Warn),
        failed: count(Status::Fail),
        checks,
    }
}
