//! Property tests over random positive definite matrices and weight vectors.

use nalgebra::DMatrix;
use proptest::prelude::*;

use riesz::cfderiv::cf_gradient;
use riesz::matcore::{
    commutation_matrix, kron, sqrt_psd, symmetrizer, vec, Mat, MatrixFile, PosDefMatrix, SymMatrix, C64,
};
use riesz::moments::{cov, mean};
use riesz::riesz::{Riesz, RieszParams, Variant};
use riesz::specialfn::{ExponentVector, GeneralizedPower, WeightVector};
use riesz::verify::{sample_proposal, stream_rng};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn crel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn square(m: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-1.0..1.0f64, m * m).prop_map(move |v| Mat::from_row_slice(m, m, &v))
}

fn pos_def(m: usize) -> impl Strategy<Value = PosDefMatrix> {
    square(m).prop_map(move |a| PosDefMatrix::from_matrix(&a * a.transpose() / m as f64 + Mat::identity(m, m) * 0.3).unwrap())
}

fn symmetric(m: usize, scale: f64) -> impl Strategy<Value = SymMatrix> {
    square(m).prop_map(move |a| SymMatrix::new((&a + a.transpose()) * (0.5 * scale)).unwrap())
}

fn kappa(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..3.0f64, m).prop_map(|mut k| {
        k.sort_by(|a, b| b.total_cmp(a));
        k
    })
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::TypeI), Just(Variant::TypeII)]
}

/// A valid distribution of order `m`; `a` sits a random margin above the bound.
fn dist(m: usize) -> impl Strategy<Value = Riesz> {
    (variant(), kappa(m), 0.2..4.0f64, pos_def(m)).prop_map(move |(v, k, margin, sigma)| {
        let half = (m as f64 - 1.0) / 2.0;
        let a = match v {
            Variant::TypeI => half - k[k.len() - 1] + margin,
            Variant::TypeII => half + k[0] + margin,
        };
        RieszParams::new(v, a, WeightVector::new(k).unwrap(), sigma).validate().unwrap()
    })
}

fn order() -> impl Strategy<Value = usize> {
    1usize..=4
}

fn max_abs(a: &Mat) -> f64 {
    a.amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vec_inner_product_is_trace((a, b) in order().prop_flat_map(|m| (square(m), square(m)))) {
        let lhs = vec(&a).dot(&vec(&b));
        let rhs = (a.transpose() * &b).trace();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn commutation_swaps_vec((m, n) in (1usize..5, 1usize..5), seed in any::<u64>()) {
        let a = DMatrix::from_fn(m, n, |r, s| ((seed >> ((r * n + s) % 60)) & 0xff) as f64 - 100.0);
        prop_assert_eq!(commutation_matrix(m, n) * vec(&a), vec(&a.transpose()));
        prop_assert_eq!(commutation_matrix(m, n) * commutation_matrix(n, m), Mat::identity(m * n, m * n));
    }

    #[test]
    fn symmetrizer_absorbs_kron(b in order().prop_flat_map(|m| symmetric(m, 2.0))) {
        let m = b.order();
        let n = symmetrizer(m);
        let bb = kron(b.as_matrix(), b.as_matrix());
        let lhs = &n * &bb * &n;
        let rhs = &n * &bb;
        prop_assert!(max_abs(&(lhs - &rhs)) <= 1e-12 * max_abs(&rhs).max(1e-300));
    }

    #[test]
    fn sqrt_scales((a, c) in (order().prop_flat_map(pos_def), 0.01..100.0f64)) {
        let s = sqrt_psd(&a).unwrap();
        let sc = sqrt_psd(&a.scale(c).unwrap()).unwrap();
        let want = s.as_matrix() * c.sqrt();
        prop_assert!(max_abs(&(sc.as_matrix() - &want)) <= 1e-12 * max_abs(&want));
    }

    #[test]
    fn gpower_exponents_add((a, k, t) in order().prop_flat_map(|m| (pos_def(m), kappa(m), kappa(m)))) {
        let q = |x: &[f64]| a.gpower(&ExponentVector::new(x.to_vec())).unwrap();
        let sum: Vec<f64> = k.iter().zip(&t).map(|(x, y)| x + y).collect();
        prop_assert!(rel(q(&sum), q(&k) * q(&t)) <= 1e-10);
    }

    #[test]
    fn gpower_determinant_shift((a, k, p) in order().prop_flat_map(|m| (pos_def(m), kappa(m), -2.0..2.0f64))) {
        let q = |x: &[f64]| a.gpower(&ExponentVector::new(x.to_vec())).unwrap();
        let shifted: Vec<f64> = k.iter().map(|x| x + p).collect();
        prop_assert!(rel(q(&shifted), (p * a.ln_det()).exp() * q(&k)) <= 1e-10);
        let constant = vec![p; k.len()];
        prop_assert!(rel(q(&constant), (p * a.ln_det()).exp()) <= 1e-10);
    }

    #[test]
    fn gpower_lower_congruence((a, l, k) in order().prop_flat_map(|m| (pos_def(m), square(m), kappa(m)))) {
        let m = a.order();
        let b = Mat::from_fn(m, m, |r, s| if r > s { l[(r, s)] } else if r == s { 0.5 + l[(r, s)].abs() } else { 0.0 });
        let bab = PosDefMatrix::from_matrix(&b * a.as_matrix() * b.transpose()).unwrap();
        let c = PosDefMatrix::from_matrix(&b * b.transpose()).unwrap();
        let t = ExponentVector::new(k);
        let lhs = bab.gpower(&t).unwrap();
        prop_assert!(rel(lhs, c.gpower(&t).unwrap() * a.gpower(&t).unwrap()) <= 1e-10);
    }

    #[test]
    fn cf_hermitian_and_bounded((d, t) in order().prop_flat_map(|m| (dist(m), symmetric(m, 2.0)))) {
        let phi = d.char_fn(&t).unwrap();
        let neg = d.char_fn(&t.scale(-1.0)).unwrap();
        prop_assert!((phi - neg.conj()).norm() <= 1e-12 * phi.norm().max(1e-300) + 1e-300);
        prop_assert!(phi.norm() <= 1.0 + 1e-12);
        prop_assert_eq!(d.char_fn(&SymMatrix::zeros(d.order())).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn kappa_zero_cf_is_determinant_power((v, a, sigma, t) in order().prop_flat_map(|m| (variant(), 0.0..3.0f64, pos_def(m), symmetric(m, 2.0)))) {
        let m = sigma.order();
        let a = (m as f64 - 1.0) / 2.0 + 0.1 + a;
        let d = RieszParams::new(v, a, WeightVector::zeros(m), sigma.clone()).validate().unwrap();
        let root = sqrt_psd(&sigma).unwrap();
        let inner = root.as_matrix() * t.as_matrix() * root.as_matrix();
        let arg = DMatrix::from_fn(m, m, |r, s| C64::new(if r == s { 1.0 } else { 0.0 }, -inner[(r, s)]));
        let want = arg.determinant().powc(C64::new(-a, 0.0));
        prop_assert!(crel(d.char_fn(&t).unwrap(), want) <= 1e-12);
    }

    #[test]
    fn univariate_type_one_is_gamma((a, k, s, x, t) in (0.1..5.0f64, 0.0..3.0f64, 0.1..5.0f64, 0.01..20.0f64, -3.0..3.0f64)) {
        let sigma = PosDefMatrix::from_row_slice(1, &[s]).unwrap();
        let d = RieszParams::new(Variant::TypeI, a, WeightVector::new(vec![k]).unwrap(), sigma).validate().unwrap();
        let shape = a + k;
        let want = statrs::function::gamma::ln_gamma(shape);
        let ln_pdf = (shape - 1.0) * x.ln() - x / s - shape * s.ln() - want;
        let got = d.log_density(&PosDefMatrix::from_row_slice(1, &[x]).unwrap()).unwrap();
        prop_assert!((got - ln_pdf).abs() <= 1e-12 * ln_pdf.abs().max(1.0));
        let cf = d.char_fn(&SymMatrix::from_row_slice(1, &[t]).unwrap()).unwrap();
        let want_cf = C64::new(1.0, -s * t).powc(C64::new(-shape, 0.0));
        prop_assert!(crel(cf, want_cf) <= 1e-12);
    }

    #[test]
    fn moments_scale_with_sigma((d, c) in (order().prop_flat_map(dist), 0.05..20.0f64)) {
        let p = d.params();
        let scaled = RieszParams::new(p.variant, p.a, p.kappa.clone(), p.sigma.scale(c).unwrap()).validate().unwrap();
        let mu = mean(&d).into_matrix();
        let mu_c = mean(&scaled).into_matrix();
        prop_assert!(max_abs(&(mu_c - &mu * c)) <= 1e-12 * max_abs(&mu) * c);
        let v = cov(&d);
        let v_c = cov(&scaled);
        prop_assert!(max_abs(&(v_c - &v * (c * c))) <= 1e-12 * max_abs(&v) * c * c);
    }

    #[test]
    fn covariance_structure(d in order().prop_flat_map(dist)) {
        let m = d.order();
        let v = cov(&d);
        let scale = max_abs(&v);
        prop_assert!(max_abs(&(&v - v.transpose())) <= 1e-12 * scale);
        let n = symmetrizer(m);
        prop_assert!(max_abs(&(&n * &v * &n - &v)) <= 1e-12 * scale);
        if d.variant() == Variant::TypeI {
            let min_eig = v.symmetric_eigenvalues().min();
            prop_assert!(min_eig >= -1e-10 * scale, "min eigenvalue {min_eig}");
        }
    }

    #[test]
    fn diagonal_sigma_mean_telescopes((v, k, margin, diag) in order().prop_flat_map(|m| (variant(), kappa(m), 0.2..3.0f64, prop::collection::vec(0.1..4.0f64, m)))) {
        let m = k.len();
        let half = (m as f64 - 1.0) / 2.0;
        let a = match v { Variant::TypeI => half - k[m - 1] + margin, Variant::TypeII => half + k[0] + margin };
        let sigma = PosDefMatrix::from_matrix(Mat::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()))).unwrap();
        let d = RieszParams::new(v, a, WeightVector::new(k.clone()).unwrap(), sigma).validate().unwrap();
        let mu = mean(&d).into_matrix();
        for r in 0..m {
            for s in 0..m {
                let want = match (r == s, v) {
                    (false, _) => 0.0,
                    (true, Variant::TypeI) => diag[r] * (a + k[r]),
                    (true, Variant::TypeII) => diag[r] * (a - k[r]),
                };
                prop_assert!((mu[(r, s)] - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_at_zero_is_imaginary(d in order().prop_flat_map(dist)) {
        let g = cf_gradient(&d, &SymMatrix::zeros(d.order())).unwrap();
        let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(g.iter().all(|z| z.re.abs() <= 1e-10 * scale.max(1.0)));
        let mu = vec(mean(&d).as_matrix());
        for (z, m) in g.iter().zip(mu.iter()) {
            prop_assert!((z.im - m).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn sampler_is_deterministic((sigma, a, seed, stream) in (order().prop_flat_map(pos_def), 0.0..3.0f64, any::<u64>(), any::<u64>())) {
        let a = (sigma.order() as f64 - 1.0) / 2.0 + 0.1 + a;
        let x = sample_proposal(a, &sigma, &mut stream_rng(seed, stream)).unwrap();
        let y = sample_proposal(a, &sigma, &mut stream_rng(seed, stream)).unwrap();
        prop_assert_eq!(x.x.as_matrix(), y.x.as_matrix());
        prop_assert_eq!(x.log_proposal_density.to_bits(), y.log_proposal_density.to_bits());
    }

    #[test]
    fn matrix_file_round_trips(a in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| prop::collection::vec(prop::num::f64::NORMAL, r * c).prop_map(move |v| Mat::from_row_slice(r, c, &v)))) {
        let text = serde_json::to_string(&MatrixFile::from(&a)).unwrap();
        let back: MatrixFile = serde_json::from_str(&text).unwrap();
        let b = back.to_matrix().unwrap();
        prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(a.shape(), b.shape());
    }
}
