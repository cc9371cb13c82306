//! Analytic constitutive tensors against direct through-thickness integration.

mod common;

use common::section::{check_against_oracle, metric_from};
use klshell::constitutive::{default_models, model_registry, Material};
use klshell::thickness::{ClosedForm, Quadrature, ThicknessIntegrator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[test]
fn analytic_tensor_matches_block_integration_cylinder() {
    let m = metric_from(1.0, 0.0, 0.0, 0.0, 1.0);
    check_against_oracle(&m, 0.8, 1e-8).unwrap();
}

#[test]
fn analytic_tensor_matches_block_integration_general() {
    let m = metric_from(0.9, -0.4, 0.35, 0.3, 1.2);
    check_against_oracle(&m, 0.6, 1e-8).unwrap();
    let m = metric_from(-1.1, -0.5, 1.1, -0.2, 0.8);
    check_against_oracle(&m, 0.5, 1e-8).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_tensor_matches_block_integration_random(
        k1 in -1.0f64..1.0, k2 in -1.0f64..1.0, angle in 0.0f64..3.2,
        skew in -0.5f64..0.5, stretch in 0.6f64..1.6, kh in 0.05f64..1.5)
    {
        let m = metric_from(k1, k2, angle, skew, stretch);
        prop_assume!(m.trace.abs() > 1e-3);
        let h = kh / m.trace.abs();
        let kmax = k1.abs().max(k2.abs());
        prop_assume!(kmax * h / 2.0 < 0.9);
        if let Err(e) = check_against_oracle(&m, h, 1e-8) {
            prop_assert!(false, "{}", e);
        }
    }
}

#[test]
fn closed_form_integrals_over_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let oracle = Quadrature::new(64);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 1000 {
        let h: f64 = rng.gen_range(0.01..2.0);
        let kh: f64 = rng.gen_range(0.05..1.5);
        let trace = if rng.gen_bool(0.5) { kh / h } else { -kh / h };
        // split T = κ1 + κ2 with κ2 free, keeping every fiber of positive length
        let k2 = rng.gen_range(-1.8..1.8) / h;
        let k1 = trace - k2;
        if k1.abs().max(k2.abs()) * h / 2.0 >= 0.9 {
            continue;
        }
        let b = k1 * k2;
        let c = ClosedForm.integrals(trace, b, h).unwrap();
        let q = oracle.integrals(trace, b, h).unwrap();
        for k in 0..5 {
            let rel = (c[k] - q[k]).abs() / q[k].abs();
            worst = worst.max(rel);
            assert!(rel <= 1e-9, "T={trace} b={b} h={h} k={k}: {} vs {}", c[k], q[k]);
        }
        checked += 1;
    }
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn reduced_models_are_truncations_of_the_analytic_tensor() {
    // for Kh → 0 every model converges to D0 with relative differences O(Kh)
    let mat = Material::new(1.0, 0.3).unwrap();
    let reg = default_models();
    let mut prev = f64::INFINITY;
    for kh in [0.2, 0.1, 0.05, 0.025] {
        let m = metric_from(1.0, 0.3, 0.2, 0.1, 1.0);
        let h = kh / m.trace.abs();
        let da = reg.get("Da").unwrap().tensor(&m, &mat, h).unwrap();
        let d2 = reg.get("D2").unwrap().tensor(&m, &mat, h).unwrap();
        let scale = d2.bending().amax();
        let gap = (da.coupling() - d2.coupling()).amax() / scale;
        assert!(gap < prev);
        prev = gap;
    }
}

#[test]
fn coupling_ordering_on_cylinder() {
    // Frobenius distance of each reduced coupling block to the analytic one at Kh = 0.236
    let mat = Material::new(1.0, 0.3).unwrap();
    let m = metric_from(1.0, 0.0, 0.0, 0.0, 1.0);
    let h = 0.236;
    let reg = model_registry(Arc::new(Quadrature::new(64)));
    let da = reg.get("Da").unwrap().tensor(&m, &mat, h).unwrap();
    let dist = |n: &str| (reg.get(n).unwrap().tensor(&m, &mat, h).unwrap().d - da.d).norm();
    let (e0, e1, e2) = (dist("D0"), dist("D1"), dist("D2"));
    assert!(e2 < e1 && e2 < e0, "D0 {e0:e} D1 {e1:e} D2 {e2:e}");
}
