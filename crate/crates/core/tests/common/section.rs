//! Through-thickness oracles for section-force tensors.

use klshell::constitutive::{default_models, material_tensor, to_voigt, Material, Tensor4};
use klshell::kinematics::DistributionTensors;
use klshell::metric::{compute_metric, MidsurfaceMetric};
use klshell::quadrature::GaussRule;
use nalgebra::{Matrix3, Vector3};

/// Principal curvatures κ1, κ2 along rotated orthonormal directions, plus a skewed parametrization.
pub fn metric_from(k1: f64, k2: f64, angle: f64, skew: f64, stretch: f64) -> MidsurfaceMetric {
    let (c, s) = (angle.cos(), angle.sin());
    // second fundamental form in the orthonormal frame (x, y)
    let bxx = k1 * c * c + k2 * s * s;
    let byy = k1 * s * s + k2 * c * c;
    let bxy = (k1 - k2) * c * s;
    let g1 = Vector3::new(stretch, 0.0, 0.0);
    let g2 = Vector3::new(skew, 1.0, 0.0);
    // x_,αβ · n = b_αβ with n = e_z (downward sign convention handled by compute_metric)
    let bb = |u: &Vector3<f64>, v: &Vector3<f64>| u.x * v.x * bxx + u.y * v.y * byy + (u.x * v.y + u.y * v.x) * bxy;
    let d2 = [
        Vector3::new(0.0, 0.0, bb(&g1, &g1)),
        Vector3::new(0.0, 0.0, bb(&g2, &g2)),
        Vector3::new(0.0, 0.0, bb(&g1, &g2)),
    ];
    compute_metric(&[g1, g2], &d2).unwrap()
}

pub fn contract(a: &Tensor4, d: &Tensor4, c: &Tensor4) -> Tensor4 {
    // out^{μνρσ} = a^{μν}_{αβ} D^{αβγδ} c^{ρσ}_{γδ}
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    for mu in 0..2 {
        for nu in 0..2 {
            for rh in 0..2 {
                for si in 0..2 {
                    let mut v = 0.0;
                    for al in 0..2 {
                        for be in 0..2 {
                            for ga in 0..2 {
                                for de in 0..2 {
                                    v += a[mu][nu][al][be] * d[al][be][ga][de] * c[rh][si][ga][de];
                                }
                            }
                        }
                    }
                    out[mu][nu][rh][si] = v;
                }
            }
        }
    }
    out
}

/// Section-force tensors from ∫ (A, −ζB)ᵀ D̄ (A, −ζB) g0 dζ with 64-point Gauss integration.
pub fn block_oracle(m: &MidsurfaceMetric, mat: &Material, h: f64) -> (Matrix3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let rule = GaussRule::new(64);
    let (mut dm, mut dmb, mut db) = (Matrix3::zeros(), Matrix3::zeros(), Matrix3::zeros());
    for (z, w) in rule.mapped(-0.5 * h, 0.5 * h) {
        let s = m.shift(z).unwrap();
        let dbar = material_tensor(&s.metric_inv(m), mat);
        let t = DistributionTensors::new(m, z).unwrap();
        let f = w * s.g0;
        dm += f * to_voigt(&contract(&t.a, &dbar, &t.a));
        dmb += -f * z * to_voigt(&contract(&t.a, &dbar, &t.bt));
        db += f * z * z * to_voigt(&contract(&t.bt, &dbar, &t.bt));
    }
    (dm, dmb, db)
}

pub fn check_against_oracle(m: &MidsurfaceMetric, h: f64, tol: f64) -> Result<(), String> {
    let mat = Material::new(2.5, 0.3).unwrap();
    let da = default_models().get("Da").unwrap().tensor(m, &mat, h).unwrap();
    let (dm, dmb, db) = block_oracle(m, &mat, h);
    let blocks = [("membrane", da.membrane(), dm), ("coupling", da.coupling(), dmb), ("bending", da.bending(), db)];
    for (name, ours, oracle) in blocks {
        // each block relative to its own natural scale
        let scale = oracle.amax().max(ours.amax());
        let err = (ours - oracle).amax();
        if err > tol * scale {
            return Err(format!("{name}: err {err:e} scale {scale:e}\nours {ours}\noracle {oracle}"));
        }
    }
    Ok(())
}
