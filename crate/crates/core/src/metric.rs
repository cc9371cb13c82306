//! Midsurface and equidistant-surface metric of a (possibly deformed) shell.

use nalgebra::{Matrix2, Vector3};

use crate::error::{Result, ShellError};

/// Complete first and second fundamental forms at one parametric point.
#[derive(Debug, Clone, Copy)]
pub struct MidsurfaceMetric {
    /// g1, g2 (tangent base vectors) and the unit normal g3.
    pub g: [Vector3<f64>; 3],
    /// Reciprocal tangent vectors g^1, g^2.
    pub g_contra: [Vector3<f64>; 2],
    pub g_cov: Matrix2<f64>,
    pub g_inv: Matrix2<f64>,
    pub g_det: f64,
    pub sqrt_g: f64,
    /// gamma[n][a][b] = Γ^n_ab.
    pub gamma: [[[f64; 2]; 2]; 2],
    pub b_cov: Matrix2<f64>,
    /// b_mix[(mu, alpha)] = b^mu_alpha.
    pub b_mix: Matrix2<f64>,
    pub trace: f64,
    pub b_det: f64,
}

/// Shift tensor, its reciprocal and the shifter at one ζ.
#[derive(Debug, Clone, Copy)]
pub struct ShiftState {
    pub zeta: f64,
    pub g0: f64,
    /// c_bar[(mu, alpha)] = C̄^mu_alpha.
    pub c_bar: Matrix2<f64>,
    /// c_rec[(alpha, nu)] = C^alpha_nu.
    pub c_rec: Matrix2<f64>,
}

/// Metric from first derivatives (x_,1, x_,2) and second derivatives (x_,11, x_,22, x_,12).
pub fn compute_metric(d1: &[Vector3<f64>; 2], d2: &[Vector3<f64>; 3]) -> Result<MidsurfaceMetric> {
    let (g1, g2) = (d1[0], d1[1]);
    let a = g1.cross(&g2);
    let area = a.norm();
    let scale = g1.norm().max(g2.norm());
    if !(area >= 1e-14 * scale * scale) || scale == 0.0 {
        return Err(ShellError::DegenerateSurface { area });
    }
    let g3 = a / area;
    let g_cov = Matrix2::new(g1.dot(&g1), g1.dot(&g2), g2.dot(&g1), g2.dot(&g2));
    let g_det = g_cov.determinant();
    let g_inv = Matrix2::new(g_cov[(1, 1)], -g_cov[(0, 1)], -g_cov[(1, 0)], g_cov[(0, 0)]) / g_det;
    let g_contra = [g_inv[(0, 0)] * g1 + g_inv[(0, 1)] * g2, g_inv[(1, 0)] * g1 + g_inv[(1, 1)] * g2];
    let second = |a: usize, b: usize| -> &Vector3<f64> {
        match (a, b) {
            (0, 0) => &d2[0],
            (1, 1) => &d2[1],
            _ => &d2[2],
        }
    };
    let mut gamma = [[[0.0; 2]; 2]; 2];
    let mut b_cov = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let x = second(a, b);
            for n in 0..2 {
                gamma[n][a][b] = x.dot(&g_contra[n]);
            }
            b_cov[(a, b)] = x.dot(&g3);
        }
    }
    let b_mix = g_inv * b_cov;
    Ok(MidsurfaceMetric {
        g: [g1, g2, g3],
        g_contra,
        g_cov,
        g_inv,
        g_det,
        sqrt_g: area,
        gamma,
        b_cov,
        b_mix,
        trace: b_mix.trace(),
        b_det: b_mix.determinant(),
    })
}

impl MidsurfaceMetric {
    /// Kh = |tr b| h.
    pub fn curviness(&self, h: f64) -> f64 {
        self.trace.abs() * h
    }

    /// g0 = 1 − ζT + ζ² det b.
    pub fn shifter(&self, zeta: f64) -> f64 {
        1.0 - zeta * self.trace + zeta * zeta * self.b_det
    }

    /// Jacobian g0 of dv = g0 da dζ.
    pub fn volume_factor(&self, zeta: f64) -> Result<f64> {
        Ok(self.shift(zeta)?.g0)
    }

    pub fn shift(&self, zeta: f64) -> Result<ShiftState> {
        let g0 = self.shifter(zeta);
        if !(g0 > 0.0) {
            return Err(ShellError::SelfPenetration { zeta, kh: self.curviness(2.0 * zeta.abs()) });
        }
        let id = Matrix2::identity();
        let c_bar = id - zeta * self.b_mix;
        let c_rec = ((1.0 - zeta * self.trace) * id + zeta * self.b_mix) / g0;
        Ok(ShiftState { zeta, g0, c_bar, c_rec })
    }
}

impl ShiftState {
    /// Covariant metric of the equidistant surface, ḡ_αβ = C̄^μ_α C̄^ν_β g_μν.
    pub fn metric_cov(&self, m: &MidsurfaceMetric) -> Matrix2<f64> {
        self.c_bar.transpose() * m.g_cov * self.c_bar
    }

    /// Contravariant metric of the equidistant surface, ḡ^αβ = C^α_μ C^β_ν g^μν.
    pub fn metric_inv(&self, m: &MidsurfaceMetric) -> Matrix2<f64> {
        self.c_rec * m.g_inv * self.c_rec.transpose()
    }
}
