//! Constitutive tensors relating section forces [N¹¹, N²², N¹², M¹¹, M²², M¹²] to the reference
//! strains [d11, d22, 2d12, κ11, κ22, 2κ12].

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShellError};
use crate::kinematics::Voigt6;
use crate::metric::MidsurfaceMetric;
use crate::registry::Registry;
use crate::thickness::{integrator_registry, Integrals, ThicknessIntegrator};

pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];
pub type Matrix6 = SMatrix<f64, 6, 6>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
}

impl Material {
    pub fn new(e: f64, nu: f64) -> Result<Self> {
        let m = Material { e, nu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0) || !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(ShellError::InvalidMaterial(format!("E = {}, nu = {}", self.e, self.nu)));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    pub fn lambda(&self) -> f64 {
        self.e * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
    }
}

/// D^{αβγλ} = 2μ(½(g^{αγ}g^{βλ} + g^{αλ}g^{βγ}) + ν/(1−ν) g^{αβ}g^{γλ}) for a contravariant metric.
pub fn material_tensor(g_inv: &Matrix2<f64>, mat: &Material) -> Tensor4 {
    let mu2 = 2.0 * mat.mu();
    let c = mat.nu / (1.0 - mat.nu);
    let g = g_inv;
    let mut d = [[[[0.0; 2]; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    d[a][b][k][l] =
                        mu2 * (0.5 * (g[(a, k)] * g[(b, l)] + g[(a, l)] * g[(b, k)]) + c * g[(a, b)] * g[(k, l)]);
                }
            }
        }
    }
    d
}

const PAIRS: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// Voigt 3×3 form averaging over index-pair transpositions (acts on [x11, x22, 2x12]).
pub fn to_voigt(t: &Tensor4) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| {
        let (a, b) = PAIRS[i];
        let (c, d) = PAIRS[j];
        0.25 * (t[a][b][c][d] + t[b][a][c][d] + t[a][b][d][c] + t[b][a][d][c])
    })
}

pub fn plane_stress_voigt(g_inv: &Matrix2<f64>, mat: &Material) -> Matrix3<f64> {
    to_voigt(&material_tensor(g_inv, mat))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstitutiveTensor {
    pub d: Matrix6,
    pub model: &'static str,
}

impl ConstitutiveTensor {
    pub fn from_blocks(dm: &Matrix3<f64>, dmb: &Matrix3<f64>, db: &Matrix3<f64>, model: &'static str) -> Self {
        let mut d = Matrix6::zeros();
        d.fixed_view_mut::<3, 3>(0, 0).copy_from(dm);
        d.fixed_view_mut::<3, 3>(0, 3).copy_from(dmb);
        d.fixed_view_mut::<3, 3>(3, 0).copy_from(&dmb.transpose());
        d.fixed_view_mut::<3, 3>(3, 3).copy_from(db);
        ConstitutiveTensor { d, model }
    }

    pub fn membrane(&self) -> Matrix3<f64> {
        self.d.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn coupling(&self) -> Matrix3<f64> {
        self.d.fixed_view::<3, 3>(0, 3).into_owned()
    }

    pub fn bending(&self) -> Matrix3<f64> {
        self.d.fixed_view::<3, 3>(3, 3).into_owned()
    }

    /// ḟ = D e.
    pub fn section_force_rate(&self, e: &Voigt6) -> Voigt6 {
        let mut f = [0.0; 6];
        for i in 0..6 {
            for j in 0..6 {
                f[i] += self.d[(i, j)] * e[j];
            }
        }
        f
    }
}

pub trait ConstitutiveModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn tensor(&self, m: &MidsurfaceMetric, mat: &Material, h: f64) -> Result<ConstitutiveTensor>;
}

fn matmul2(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix2<f64> {
    a * b
}

/// Membrane block from the expanded integral form with thickness integrals `i`.
fn membrane_block(d: &Tensor4, b: &Matrix2<f64>, bb: &Matrix2<f64>, t: f64, i: &Integrals) -> Tensor4 {
    let c0 = i[0] - 2.0 * t * i[1] + t * t * i[2];
    let k1 = 2.0 * i[1] - 3.0 * t * i[2] + t * t * i[3];
    let k2 = i[2] - t * i[3];
    let k3 = 4.0 * i[2] - 4.0 * t * i[3] + t * t * i[4];
    let k4 = 2.0 * i[3] - t * i[4];
    let i4 = i[4];
    let l = |x: usize, y: usize| b[(x, y)] * k1 + bb[(x, y)] * k2;
    let q = |x: usize, y: usize, u: usize, v: usize| {
        b[(x, y)] * b[(u, v)] * k3 + (bb[(x, y)] * b[(u, v)] + b[(x, y)] * bb[(u, v)]) * k4 + bb[(x, y)] * bb[(u, v)] * i4
    };
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    for g in 0..2 {
        for la in 0..2 {
            for ch in 0..2 {
                for om in 0..2 {
                    let mut s = c0 * d[g][la][ch][om];
                    for n in 0..2 {
                        s += 0.5 * l(la, n) * d[g][n][ch][om];
                        s += 0.5 * l(om, n) * d[g][la][ch][n];
                        s += 0.5 * l(ch, n) * d[g][la][n][om];
                        s += 0.5 * l(g, n) * d[n][la][ch][om];
                    }
                    for n in 0..2 {
                        for f in 0..2 {
                            s += 0.25 * q(om, f, la, n) * d[g][n][ch][f];
                            s += 0.25 * q(om, f, g, n) * d[n][la][ch][f];
                            s += 0.25 * q(ch, f, la, n) * d[g][n][f][om];
                            s += 0.25 * q(ch, f, g, n) * d[n][la][f][om];
                        }
                    }
                    out[g][la][ch][om] = s;
                }
            }
        }
    }
    out
}

/// Coupling block X^{λγχω} (bending pair first, membrane pair second) with X = −D_BM.
fn coupling_block(d: &Tensor4, b: &Matrix2<f64>, bb: &Matrix2<f64>, t: f64, i: &Integrals) -> Tensor4 {
    let c1 = i[1] - 2.0 * t * i[2] + t * t * i[3];
    let k2m = i[2] - t * i[3];
    let k1 = 2.0 * i[2] - 3.0 * t * i[3] + t * t * i[4];
    let k2 = i[3] - t * i[4];
    let k3 = 2.0 * i[3] - t * i[4];
    let i4 = i[4];
    let l = |x: usize, y: usize| b[(x, y)] * k1 + bb[(x, y)] * k2;
    let q = |x: usize, y: usize| b[(x, y)] * k3 + bb[(x, y)] * i4;
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    for la in 0..2 {
        for g in 0..2 {
            for ch in 0..2 {
                for om in 0..2 {
                    let mut s = c1 * d[la][g][ch][om];
                    for n in 0..2 {
                        s += 0.5 * k2m * (b[(g, n)] * d[la][n][ch][om] + b[(la, n)] * d[n][g][ch][om]);
                        s += 0.5 * l(om, n) * d[la][g][ch][n];
                        s += 0.5 * l(ch, n) * d[la][g][n][om];
                    }
                    for n in 0..2 {
                        for f in 0..2 {
                            s += 0.25 * b[(g, n)] * q(om, f) * d[la][n][ch][f];
                            s += 0.25 * b[(la, n)] * q(om, f) * d[n][g][ch][f];
                            s += 0.25 * b[(g, n)] * q(ch, f) * d[la][n][f][om];
                            s += 0.25 * b[(la, n)] * q(ch, f) * d[n][g][f][om];
                        }
                    }
                    out[la][g][ch][om] = s;
                }
            }
        }
    }
    out
}

fn bending_block(d: &Tensor4, b: &Matrix2<f64>, t: f64, i: &Integrals) -> Tensor4 {
    let c2 = i[2] - 2.0 * t * i[3] + t * t * i[4];
    let k = 0.5 * (i[3] - t * i[4]);
    let q = 0.25 * i[4];
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    for la in 0..2 {
        for g in 0..2 {
            for ch in 0..2 {
                for om in 0..2 {
                    let mut s = c2 * d[la][g][ch][om];
                    for n in 0..2 {
                        s += k
                            * (b[(la, n)] * d[n][g][ch][om]
                                + b[(g, n)] * d[la][n][ch][om]
                                + b[(ch, n)] * d[la][g][n][om]
                                + b[(om, n)] * d[la][g][ch][n]);
                    }
                    for n in 0..2 {
                        for f in 0..2 {
                            s += q
                                * (b[(la, n)] * b[(ch, f)] * d[n][g][f][om]
                                    + b[(la, n)] * b[(om, f)] * d[n][g][ch][f]
                                    + b[(g, n)] * b[(ch, f)] * d[la][n][f][om]
                                    + b[(g, n)] * b[(om, f)] * d[la][n][ch][f]);
                        }
                    }
                    out[la][g][ch][om] = s;
                }
            }
        }
    }
    out
}

/// Coupling block D_MB (membrane rows, bending columns) from X = −D_BM.
fn coupling_from_x(x: &Tensor4) -> Matrix3<f64> {
    -to_voigt(x).transpose()
}

fn symmetrize(m: Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (m + m.transpose())
}

/// Full analytic through-thickness integration.
pub struct AnalyticModel {
    pub integrator: Arc<dyn ThicknessIntegrator>,
}

impl ConstitutiveModel for AnalyticModel {
    fn name(&self) -> &'static str {
        "Da"
    }

    fn tensor(&self, m: &MidsurfaceMetric, mat: &Material, h: f64) -> Result<ConstitutiveTensor> {
        let i = self.integrator.integrals(m.trace, m.b_det, h)?;
        let d = material_tensor(&m.g_inv, mat);
        let b = m.b_mix;
        let bb = matmul2(&b, &b);
        let dm = symmetrize(to_voigt(&membrane_block(&d, &b, &bb, m.trace, &i)));
        let dmb = coupling_from_x(&coupling_block(&d, &b, &bb, m.trace, &i));
        let db = symmetrize(to_voigt(&bending_block(&d, &b, m.trace, &i)));
        Ok(ConstitutiveTensor::from_blocks(&dm, &dmb, &db, "Da"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedKind {
    /// Decoupled membrane and bending.
    D0,
    /// Coupling from the first-order expansion of 1/g0.
    D1,
    /// D1 plus the curvature terms of the coupling.
    D2,
}

pub struct ReducedModel(pub ReducedKind);

impl ConstitutiveModel for ReducedModel {
    fn name(&self) -> &'static str {
        match self.0 {
            ReducedKind::D0 => "D0",
            ReducedKind::D1 => "D1",
            ReducedKind::D2 => "D2",
        }
    }

    fn tensor(&self, m: &MidsurfaceMetric, mat: &Material, h: f64) -> Result<ConstitutiveTensor> {
        let d = material_tensor(&m.g_inv, mat);
        let dv = to_voigt(&d);
        let h3 = h * h * h / 12.0;
        let dmb = match self.0 {
            ReducedKind::D0 => Matrix3::zeros(),
            ReducedKind::D1 => coupling_from_x(&scale4(&d, -h3 * m.trace)),
            ReducedKind::D2 => {
                // expanded coupling with I0 = h, I1 = T h³/12, I2 = h³/12, I3 = I4 = 0
                let i = [h, m.trace * h3, h3, 0.0, 0.0];
                let b = m.b_mix;
                coupling_from_x(&coupling_block(&d, &b, &matmul2(&b, &b), m.trace, &i))
            }
        };
        Ok(ConstitutiveTensor::from_blocks(&(h * dv), &dmb, &(h3 * dv), self.name()))
    }
}

fn scale4(t: &Tensor4, s: f64) -> Tensor4 {
    let mut o = *t;
    for a in o.iter_mut().flatten().flatten().flatten() {
        *a *= s;
    }
    o
}

pub fn model_registry(integrator: Arc<dyn ThicknessIntegrator>) -> Registry<dyn ConstitutiveModel> {
    let mut r: Registry<dyn ConstitutiveModel> = Registry::new("constitutive model");
    r.register("Da", Arc::new(AnalyticModel { integrator }));
    r.register("D0", Arc::new(ReducedModel(ReducedKind::D0)));
    r.register("D1", Arc::new(ReducedModel(ReducedKind::D1)));
    r.register("D2", Arc::new(ReducedModel(ReducedKind::D2)));
    r
}

/// Registry with the default (switched closed-form) thickness integration.
pub fn default_models() -> Registry<dyn ConstitutiveModel> {
    model_registry(integrator_registry().get("switched").expect("default integrator"))
}

/// Stress at an equidistant surface: σ̄^{αβ} = D̄^{αβνγ} d̄_νγ with D̄ built from ḡ^{αβ}.
/// Returns the contravariant tensor and its physical components σ̄^{αβ} sqrt(ḡ_αα ḡ_ββ).
pub fn equidistant_stress(
    m: &MidsurfaceMetric,
    mat: &Material,
    zeta: f64,
    dbar: &Matrix2<f64>,
) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let s = m.shift(zeta)?;
    let ginv = s.metric_inv(m);
    let gcov = s.metric_cov(m);
    let d = material_tensor(&ginv, mat);
    let sigma = Matrix2::from_fn(|a, b| {
        let mut v = 0.0;
        for k in 0..2 {
            for l in 0..2 {
                v += d[a][b][k][l] * dbar[(k, l)];
            }
        }
        v
    });
    let phys = Matrix2::from_fn(|a, b| sigma[(a, b)] * (gcov[(a, a)] * gcov[(b, b)]).sqrt());
    Ok((sigma, phys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::compute_metric;
    use nalgebra::Vector3;

    fn flat() -> MidsurfaceMetric {
        compute_metric(&[Vector3::x(), Vector3::y()], &[Vector3::zeros(); 3]).unwrap()
    }

    fn cylinder(r: f64) -> MidsurfaceMetric {
        compute_metric(&[Vector3::x(), Vector3::y()], &[Vector3::new(0.0, 0.0, 1.0 / r), Vector3::zeros(), Vector3::zeros()])
            .unwrap()
    }

    #[test]
    fn unit_material() {
        let d = plane_stress_voigt(&Matrix2::identity(), &Material::new(1.0, 0.0).unwrap());
        assert!((d - Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5)).amax() < 1e-15);
    }

    #[test]
    fn classical_plane_stress() {
        let (e, nu) = (210.0, 0.3);
        let d = plane_stress_voigt(&Matrix2::identity(), &Material::new(e, nu).unwrap());
        let c = e / (1.0 - nu * nu);
        let expect = c * Matrix3::new(1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu));
        assert!((d - expect).amax() < 1e-12);
    }

    #[test]
    fn skewed_metric_transforms_as_tensor() {
        // covariant basis g_α = J e_α: contravariant components transform with J^{-1}
        let j = Matrix2::new(1.3, 0.4, -0.2, 0.9);
        let g_cov = j.transpose() * j;
        let g_inv = g_cov.try_inverse().unwrap();
        let mat = Material::new(7.0, 0.25).unwrap();
        let dskew = material_tensor(&g_inv, &mat);
        let dorth = material_tensor(&Matrix2::identity(), &mat);
        let ji = j.try_inverse().unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        let mut v = 0.0;
                        for i in 0..2 {
                            for k in 0..2 {
                                for l in 0..2 {
                                    for m in 0..2 {
                                        v += ji[(a, i)] * ji[(b, k)] * ji[(c, l)] * ji[(d, m)] * dorth[i][k][l][m];
                                    }
                                }
                            }
                        }
                        assert!((v - dskew[a][b][c][d]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn all_models_coincide_on_plate() {
        let reg = default_models();
        let mat = Material::new(100.0, 0.3).unwrap();
        let m = flat();
        let h = 0.2;
        let d0 = reg.get("D0").unwrap().tensor(&m, &mat, h).unwrap();
        for name in ["Da", "D1", "D2"] {
            let d = reg.get(name).unwrap().tensor(&m, &mat, h).unwrap();
            assert!((d.d - d0.d).amax() <= 1e-12 * d0.d.amax(), "{name}");
        }
    }

    #[test]
    fn reduced_models_share_membrane_and_bending() {
        let reg = default_models();
        let mat = Material::new(1.0, 0.3).unwrap();
        let m = cylinder(2.0);
        let t: Vec<_> = ["D0", "D1", "D2"].iter().map(|n| reg.get(n).unwrap().tensor(&m, &mat, 0.4).unwrap()).collect();
        for x in &t[1..] {
            assert_eq!(x.membrane(), t[0].membrane());
            assert_eq!(x.bending(), t[0].bending());
        }
        assert_eq!(t[0].coupling(), Matrix3::zeros());
        assert!(t[1].coupling().amax() > 0.0);
    }

    #[test]
    fn analytic_is_symmetric_and_coupled() {
        let reg = default_models();
        let mat = Material::new(1.0, 0.3).unwrap();
        let m = cylinder(1.0);
        let da = reg.get("Da").unwrap().tensor(&m, &mat, 0.3).unwrap();
        assert!((da.d - da.d.transpose()).amax() <= 1e-12 * da.d.amax());
        let f = da.section_force_rate(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(f[0].abs() > 0.0);
        let d0 = reg.get("D0").unwrap().tensor(&m, &mat, 0.3).unwrap();
        let f0 = d0.section_force_rate(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(f0[0], 0.0);
        assert_eq!(da.section_force_rate(&[0.0; 6]), [0.0; 6]);
    }

    #[test]
    fn equidistant_stress_plate() {
        let mat = Material::new(10.0, 0.25).unwrap();
        let d = Matrix2::new(1e-3, 0.0, 0.0, 2e-3);
        let (s, p) = equidistant_stress(&flat(), &mat, 0.1, &d).unwrap();
        let c = 10.0 / (1.0 - 0.0625);
        assert!((s[(0, 0)] - c * (1e-3 + 0.25 * 2e-3)).abs() < 1e-14);
        assert_eq!(s, p);
    }

    #[test]
    fn rejects_invalid_material() {
        assert!(Material::new(-1.0, 0.3).is_err());
        assert!(Material::new(1.0, 0.5).is_err());
    }
}
