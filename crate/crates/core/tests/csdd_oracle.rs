mod common;

use common::{random_batch, random_direction, random_instance, SMOOTH};
use csnk_core::csdd::{brute_hessian, csdd2, csdd_grad_hv, CSDD_DEFAULT_H1, CSDD_DEFAULT_H2};
use csnk_core::objective::NetObjective;
use csnk_core::tensor_net::{Activation, Layer, Loss, Model};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LOSSES: [Loss; 3] = [Loss::CrossEntropySoftmax, Loss::Mse, Loss::Logistic];

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mat_vec(h: &[f64], p: &[f64]) -> Vec<f64> {
    h.chunks(p.len()).map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum()).collect()
}

#[test]
fn hv_matches_brute_force_hessian_on_tanh_net() {
    let model = Model::new(vec![
        Layer::dense(5, 4),
        Layer::Activation(Activation::Tanh),
        Layer::dense(4, 3),
    ])
    .unwrap();
    assert!(model.param_count() <= 44);
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = random_batch(&mut rng, Loss::CrossEntropySoftmax, 6, 5, 3);
        let obj = NetObjective::new(&model, Loss::CrossEntropySoftmax, &batch);
        let w = model.init_params(seed);
        let p = random_direction(seed + 50, model.param_count());
        let h = brute_hessian(&obj, &w, CSDD_DEFAULT_H2).unwrap();
        let hp = mat_vec(h.data(), &p);
        let hv = csdd_grad_hv(&obj, &w, &p, CSDD_DEFAULT_H1).unwrap().hv;
        assert!(diff_norm(&hv, &hp) <= 1e-6 * norm(&hp), "seed {seed}");
        let n = model.param_count();
        let hmax = h.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for a in 0..n {
            for b in 0..a {
                assert!((h.data()[a * n + b] - h.data()[b * n + a]).abs() <= 1e-8 * hmax);
            }
        }
    }
}

#[test]
fn quadratic_form_agrees_with_hessian_vector_product() {
    for seed in 0..100 {
        let inst = random_instance(seed, &SMOOTH, &LOSSES);
        let obj = NetObjective::new(&inst.model, inst.loss, &inst.batch);
        let p = random_direction(seed + 1000, inst.w.len());
        let hv = csdd_grad_hv(&obj, &inst.w, &p, CSDD_DEFAULT_H1).unwrap().hv;
        let kappa = csdd2(&obj, &inst.w, &p, CSDD_DEFAULT_H2).unwrap().kappa;
        let from_hv: f64 = p.iter().zip(&hv).map(|(a, b)| a * b).sum();
        assert!((from_hv - kappa).abs() <= 1e-6 * kappa.abs().max(1.0), "seed {seed}: {from_hv} vs {kappa}");
    }
}

#[test]
fn hv_is_linear_in_the_direction() {
    for seed in 0..20 {
        let inst = random_instance(seed, &SMOOTH, &LOSSES);
        let obj = NetObjective::new(&inst.model, inst.loss, &inst.batch);
        let p = random_direction(seed + 7, inst.w.len());
        let base = csdd_grad_hv(&obj, &inst.w, &p, CSDD_DEFAULT_H1).unwrap().hv;
        for alpha in [-1.0, 2.0, 10.0] {
            let scaled: Vec<f64> = p.iter().map(|x| alpha * x).collect();
            let hv = csdd_grad_hv(&obj, &inst.w, &scaled, CSDD_DEFAULT_H1).unwrap().hv;
            let expect: Vec<f64> = base.iter().map(|x| alpha * x).collect();
            assert!(diff_norm(&hv, &expect) <= 1e-10 * norm(&expect).max(1e-300), "seed {seed} alpha {alpha}");
        }
    }
}

#[test]
fn hv_is_insensitive_to_the_step_size() {
    for seed in 0..20 {
        let inst = random_instance(seed, &SMOOTH, &LOSSES);
        let obj = NetObjective::new(&inst.model, inst.loss, &inst.batch);
        let p = random_direction(seed + 9, inst.w.len());
        let reference = csdd_grad_hv(&obj, &inst.w, &p, 1e-20).unwrap();
        for e in 10..=30 {
            let r = csdd_grad_hv(&obj, &inst.w, &p, 10f64.powi(-e)).unwrap();
            assert!(diff_norm(&r.hv, &reference.hv) <= 1e-9 * norm(&reference.hv), "seed {seed} h 1e-{e}");
            assert!(diff_norm(&r.g, &reference.g) <= 1e-9 * norm(&reference.g));
        }
    }
}

#[test]
fn zero_direction_reproduces_the_real_gradient() {
    use csnk_core::Objective;
    let inst = random_instance(3, &SMOOTH, &LOSSES);
    let obj = NetObjective::new(&inst.model, inst.loss, &inst.batch);
    let zero = vec![0.0; inst.w.len()];
    let r = csdd_grad_hv(&obj, &inst.w, &zero, CSDD_DEFAULT_H1).unwrap();
    assert!(r.hv.iter().all(|&x| x == 0.0));
    assert_eq!(r.g, obj.grad(&inst.w).unwrap());
}

#[test]
fn logistic_regression_hessian_is_positive_semidefinite() {
    for seed in 0..3 {
        let classes = 3;
        let model = Model::new(vec![Layer::dense(6, classes)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = random_batch(&mut rng, Loss::CrossEntropySoftmax, 10, 6, classes);
        let obj = NetObjective::new(&model, Loss::CrossEntropySoftmax, &batch);
        let w = random_direction(seed, model.param_count());
        for k in 0..100 {
            let p = random_direction(seed * 1000 + k, model.param_count());
            assert!(csdd2(&obj, &w, &p, CSDD_DEFAULT_H2).unwrap().kappa >= 0.0);
        }
        let n = model.param_count();
        let h = brute_hessian(&obj, &w, CSDD_DEFAULT_H2).unwrap();
        let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (h.data()[i * n + j] + h.data()[j * n + i]));
        let min = sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-8, "seed {seed}: λ_min = {min}");
    }
}
