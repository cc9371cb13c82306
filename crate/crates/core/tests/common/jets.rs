//! Point-wise surface jets and a 3D brute-force strain oracle.

use super::dual::{Dual, DualVec};
use klshell::kinematics::build_strain_operator;
use klshell::metric::{compute_metric, MidsurfaceMetric};
use nalgebra::{Matrix2, Vector3};

/// Surface derivatives at a point: [x_1, x_2, x_11, x_22, x_12].
pub type Jet = [Vector3<f64>; 5];

pub fn metric_of(x: &Jet) -> MidsurfaceMetric {
    compute_metric(&[x[0], x[1]], &[x[2], x[3], x[4]]).unwrap()
}

/// Five fictitious control points whose basis rows are unit vectors in the derivative slots,
/// so that B_L q̇ evaluates H w for an arbitrary velocity jet.
pub fn unit_basis() -> Vec<[f64; 6]> {
    (0..5)
        .map(|k| {
            let mut r = [0.0; 6];
            r[k + 1] = 1.0;
            r
        })
        .collect()
}

pub fn reference_strain(x: &Jet, v: &Jet) -> [f64; 6] {
    let m = metric_of(x);
    build_strain_operator(&m, &unit_basis()).apply(v)
}

/// 3D brute force: ḡ_α(t) = x_,α + ζ n_,α for x(t) = x + t v, then d̄_αβ = ½ d/dt (ḡ_α·ḡ_β).
pub fn brute_force_equidistant(x: &Jet, v: &Jet, zeta: f64) -> Matrix2<f64> {
    let jet: Vec<DualVec> = (0..5).map(|k| DualVec::from_parts(x[k], v[k])).collect();
    let (g1, g2) = (jet[0], jet[1]);
    let second = |a: usize, b: usize| match (a, b) {
        (0, 0) => jet[2],
        (1, 1) => jet[3],
        _ => jet[4],
    };
    let a = g1.cross(&g2);
    let an = a.norm();
    let mut gbar = [g1, g2];
    for al in 0..2 {
        let da = second(0, al).cross(&g2) + g1.cross(&second(1, al));
        let dn = da.scale(an.recip()) - a.scale(a.dot(&da) / (an * an * an));
        gbar[al] = gbar[al] + dn.scale(Dual::constant(zeta));
    }
    Matrix2::from_fn(|i, j| 0.5 * gbar[i].dot(&gbar[j]).eps)
}

/// Random jet with a well-conditioned tangent plane (|x_1 × x_2| > 0.5).
pub fn random_jet(rng: &mut impl rand::Rng, well_conditioned: bool) -> Jet {
    loop {
        let mut x: Jet = std::array::from_fn(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)));
        if !well_conditioned {
            return x;
        }
        x[0] += Vector3::new(1.5, 0.0, 0.0);
        x[1] += Vector3::new(0.0, 1.5, 0.0);
        if x[0].cross(&x[1]).norm() > 0.5 {
            return x;
        }
    }
}

/// Fiber offset ζ = frac · 0.45/κ_max, keeping the shifter well away from zero.
pub fn admissible_zeta(m: &MidsurfaceMetric, frac: f64) -> f64 {
    let kmax = 0.5 * m.trace.abs() + (0.25 * m.trace * m.trace - m.b_det).abs().sqrt() + 1e-12;
    frac * 0.45 / kmax
}
