//! Small curved patch and finite-difference checks of the tangent.

use klshell::assembly::Configuration;
use klshell::constitutive::{default_models, Material};
use klshell::model::{GeometricVariant, Model, ModelOptions};
use klshell::nurbs::{KnotVector, NurbsSurface};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn curved_patch() -> NurbsSurface {
    let k = KnotVector::uniform(2, 1, 1).unwrap();
    let mut pts = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let (x, y) = (i as f64 * 0.5, j as f64 * 0.5);
            let z = 0.4 * (x - 0.5) * (x - 0.5) - 0.3 * (y - 0.5) * (y - 0.5) + 0.1 * x * y;
            let w = 1.0 + 0.2 * ((i + 2 * j) % 3) as f64;
            pts.push([x, y + 0.1 * x, z, w]);
        }
    }
    NurbsSurface::new(k.clone(), k, pts).unwrap().refine(4, 4, Some(3), 2).unwrap()
}

pub fn patch_model(variant: GeometricVariant, constitutive: &str) -> Model {
    Model::new(
        curved_patch(),
        0.05,
        Material::new(1000.0, 0.3).unwrap(),
        vec![],
        vec![],
        vec![],
        default_models().get(constitutive).unwrap(),
        ModelOptions { geometric: variant, ..Default::default() },
    )
    .unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-amp..amp)).collect()
}

pub fn deformed_base(m: &Model, rng: &mut ChaCha8Rng) -> Configuration {
    let c0 = m.initial_configuration().unwrap();
    let dq = random_vec(rng, c0.q.len(), 0.02);
    m.update_state(&c0, &dq, 0.0).unwrap()
}

pub fn add(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// max relative error of K δ against the central difference of F at q (full-length).
pub fn fd_error(m: &Model, base: &Configuration, q: &[f64], dir: &[f64]) -> f64 {
    let mut k = m.new_tangent();
    m.evaluate(base, q, Some(&mut k)).unwrap();
    let kd = k.mul(&m.dofs.reduce(dir));
    let tau = 1e-6;
    let fp = m.evaluate(base, &add(q, dir, tau), None).unwrap().internal;
    let fm = m.evaluate(base, &add(q, dir, -tau), None).unwrap().internal;
    let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * tau)).collect();
    let diff: Vec<f64> = kd.iter().zip(&fd).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&fd)
}
