//! Discrete strain-rate operators and the through-thickness strain distribution.
//!
//! Reference strain vector (Voigt): `[d11, d22, 2 d12, κ11, κ22, 2 κ12]`.

use nalgebra::{Matrix2, SMatrix, Vector3};

use crate::error::Result;
use crate::metric::MidsurfaceMetric;

pub type Voigt6 = [f64; 6];

/// e = H w with w_m = [v^m_,1, v^m_,2, v^m_,11, v^m_,22, v^m_,12] stacked for m = 1..3.
pub fn h_matrix(m: &MidsurfaceMetric) -> SMatrix<f64, 6, 15> {
    let mut h = SMatrix::<f64, 6, 15>::zeros();
    let g = &m.gamma;
    for k in 0..3 {
        let c = 5 * k;
        let (x1, x2, x3) = (m.g[0][k], m.g[1][k], m.g[2][k]);
        h[(0, c)] = x1;
        h[(1, c + 1)] = x2;
        h[(2, c)] = x2;
        h[(2, c + 1)] = x1;
        h[(3, c)] = -g[0][0][0] * x3;
        h[(3, c + 1)] = -g[1][0][0] * x3;
        h[(3, c + 2)] = x3;
        h[(4, c)] = -g[0][1][1] * x3;
        h[(4, c + 1)] = -g[1][1][1] * x3;
        h[(4, c + 3)] = x3;
        h[(5, c)] = -2.0 * g[0][0][1] * x3;
        h[(5, c + 1)] = -2.0 * g[1][0][1] * x3;
        h[(5, c + 4)] = 2.0 * x3;
    }
    h
}

/// B_L = H B for the supporting control points of one Gauss point.
#[derive(Debug, Clone)]
pub struct StrainOperator {
    /// Column (3 I + k) of B_L: strain response to a unit velocity of control point I in direction k.
    pub columns: Vec<Voigt6>,
}

/// `basis[I] = [R, R_1, R_2, R_11, R_22, R_12]`.
pub fn build_strain_operator(m: &MidsurfaceMetric, basis: &[[f64; 6]]) -> StrainOperator {
    let g = &m.gamma;
    let mut columns = Vec::with_capacity(3 * basis.len());
    for r in basis {
        let (r1, r2) = (r[1], r[2]);
        let k11 = r[3] - g[0][0][0] * r1 - g[1][0][0] * r2;
        let k22 = r[4] - g[0][1][1] * r1 - g[1][1][1] * r2;
        let k12 = r[5] - g[0][0][1] * r1 - g[1][0][1] * r2;
        for k in 0..3 {
            let (x1, x2, x3) = (m.g[0][k], m.g[1][k], m.g[2][k]);
            columns.push([x1 * r1, x2 * r2, x2 * r1 + x1 * r2, x3 * k11, x3 * k22, 2.0 * x3 * k12]);
        }
    }
    StrainOperator { columns }
}

impl StrainOperator {
    /// e = B_L q̇ for per-control-point velocities (same ordering as the basis).
    pub fn apply(&self, qdot: &[Vector3<f64>]) -> Voigt6 {
        let mut e = [0.0; 6];
        for (i, v) in qdot.iter().enumerate() {
            for k in 0..3 {
                let c = &self.columns[3 * i + k];
                for r in 0..6 {
                    e[r] += c[r] * v[k];
                }
            }
        }
        e
    }
}

/// w-vectors per direction: rows of `B` for one control point.
pub fn basis_w(r: &[f64; 6]) -> [f64; 5] {
    [r[1], r[2], r[3], r[4], r[5]]
}

/// κ̇_αβ = g3 · (v_,αβ − Γ^μ_αβ v_,μ), ordered [11, 22, 12].
pub fn curvature_change_rate(m: &MidsurfaceMetric, basis: &[[f64; 6]], qdot: &[Vector3<f64>]) -> [f64; 3] {
    let mut vd = [Vector3::zeros(); 5];
    for (r, v) in basis.iter().zip(qdot) {
        for k in 0..5 {
            vd[k] += r[k + 1] * v;
        }
    }
    let g = &m.gamma;
    let n = &m.g[2];
    let pairs = [(0, 0, 2), (1, 1, 3), (0, 1, 4)];
    let mut out = [0.0; 3];
    for (i, &(a, b, s)) in pairs.iter().enumerate() {
        let w = vd[s] - g[0][a][b] * vd[0] - g[1][a][b] * vd[1];
        out[i] = n.dot(&w);
    }
    out
}

/// Symmetric tensors (d_αβ, κ_αβ) from the Voigt strain vector.
pub fn split_tensors(e: &Voigt6) -> (Matrix2<f64>, Matrix2<f64>) {
    (
        Matrix2::new(e[0], 0.5 * e[2], 0.5 * e[2], e[1]),
        Matrix2::new(e[3], 0.5 * e[5], 0.5 * e[5], e[4]),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionMode {
    Exact,
    Linear,
}

/// A^{μν}_{αβ} and B^{μν}_{αβ}, stored as `[mu][nu][alpha][beta]`.
#[derive(Debug, Clone, Copy)]
pub struct DistributionTensors {
    pub a: [[[[f64; 2]; 2]; 2]; 2],
    pub bt: [[[[f64; 2]; 2]; 2]; 2],
}

impl DistributionTensors {
    pub fn new(m: &MidsurfaceMetric, zeta: f64) -> Result<Self> {
        let s = m.shift(zeta)?;
        let b = &m.b_mix;
        let c = &s.c_bar;
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut a = [[[[0.0; 2]; 2]; 2]; 2];
        let mut bt = [[[[0.0; 2]; 2]; 2]; 2];
        for mu in 0..2 {
            for nu in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        a[mu][nu][al][be] = d(mu, al) * d(nu, be) - zeta * zeta * b[(mu, al)] * b[(nu, be)];
                        bt[mu][nu][al][be] = 0.5 * (d(nu, al) * c[(mu, be)] + d(mu, be) * c[(nu, al)]);
                    }
                }
            }
        }
        Ok(DistributionTensors { a, bt })
    }
}

/// Equidistant strain d̄_αβ at ζ from the reference strains.
pub fn equidistant_strain(e: &Voigt6, m: &MidsurfaceMetric, zeta: f64, mode: DistributionMode) -> Result<Matrix2<f64>> {
    let (dm, km) = split_tensors(e);
    match mode {
        DistributionMode::Linear => Ok(dm - zeta * km),
        DistributionMode::Exact => {
            let t = DistributionTensors::new(m, zeta)?;
            let mut out = Matrix2::zeros();
            for al in 0..2 {
                for be in 0..2 {
                    let mut s = 0.0;
                    for mu in 0..2 {
                        for nu in 0..2 {
                            s += t.a[mu][nu][al][be] * dm[(mu, nu)] - zeta * t.bt[mu][nu][al][be] * km[(mu, nu)];
                        }
                    }
                    out[(al, be)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// Physical components d̄_(αβ) = d̄_αβ / sqrt(ḡ_αα ḡ_ββ).
pub fn physical_strain(dbar: &Matrix2<f64>, gbar_cov: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::from_fn(|a, b| dbar[(a, b)] / (gbar_cov[(a, a)] * gbar_cov[(b, b)]).sqrt())
}
