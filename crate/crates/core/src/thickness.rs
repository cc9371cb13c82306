//! Through-thickness integrals I_k = ∫ ζ^k / (1 − ζT + ζ²b) dζ over [−h/2, h/2], k = 0..4.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, ShellError};
use crate::quadrature::GaussRule;
use crate::registry::Registry;

pub type Integrals = [f64; 5];

pub trait ThicknessIntegrator: Send + Sync {
    fn name(&self) -> &'static str;
    /// `trace` = T, `b_det` = det b^μ_α, `h` = thickness.
    fn integrals(&self, trace: f64, b_det: f64, h: f64) -> Result<Integrals>;
}

fn check_shifter(trace: f64, b_det: f64, h: f64) -> Result<()> {
    // g0 is a quadratic in ζ: positive on the interval iff positive at both ends and,
    // when the vertex lies inside, at the vertex.
    let g0 = |z: f64| 1.0 - z * trace + z * z * b_det;
    let hh = 0.5 * h;
    let mut worst = g0(hh).min(g0(-hh));
    let mut at = if g0(hh) < g0(-hh) { hh } else { -hh };
    if b_det > 0.0 {
        let zv = trace / (2.0 * b_det);
        if zv.abs() < hh && g0(zv) < worst {
            worst = g0(zv);
            at = zv;
        }
    }
    if !(worst > 0.0) {
        return Err(ShellError::SelfPenetration { zeta: at, kh: trace.abs() * h });
    }
    Ok(())
}

/// Gauss-Legendre approximation.
pub struct Quadrature {
    rule: GaussRule,
}

impl Quadrature {
    pub fn new(points: usize) -> Self {
        Quadrature { rule: GaussRule::new(points.max(2)) }
    }
}

impl ThicknessIntegrator for Quadrature {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn integrals(&self, trace: f64, b_det: f64, h: f64) -> Result<Integrals> {
        check_shifter(trace, b_det, h)?;
        let mut out = [0.0; 5];
        for (z, w) in self.rule.mapped(-0.5 * h, 0.5 * h) {
            let f = w / (1.0 - z * trace + z * z * b_det);
            let mut zk = 1.0;
            for v in out.iter_mut() {
                *v += f * zk;
                zk *= z;
            }
        }
        Ok(out)
    }
}

/// Closed form via the factorization g0 = (1 − k1 s)(1 − k2 s) in the scaled variable s = 2ζ/h.
///
/// Each factor integrates to an artanh (complex for T² < 4b); nearly coincident roots and small
/// roots use the absolutely convergent power series instead of the divided difference.
pub struct ClosedForm;

/// m_j = ∫_{-1}^{1} s^j ds.
fn moment(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        2.0 / (j as f64 + 1.0)
    } else {
        0.0
    }
}

/// F_k(κ) = ∫ s^k / (1 − κ s) ds for k = 0..4.
fn single_factor(kappa: Complex64) -> [Complex64; 5] {
    let mut f = [Complex64::new(0.0, 0.0); 5];
    if kappa.norm() < 0.3 {
        for (k, fk) in f.iter_mut().enumerate() {
            let mut pow = Complex64::new(1.0, 0.0);
            let mut n = 0;
            loop {
                let term = pow * moment(n + k);
                *fk += term;
                if n > 2 && pow.norm() < 1e-18 {
                    break;
                }
                pow *= kappa;
                n += 1;
            }
        }
    } else {
        f[0] = 2.0 * kappa.atanh() / kappa;
        for k in 1..5 {
            f[k] = (f[k - 1] - moment(k - 1)) / kappa;
        }
    }
    f
}

impl ThicknessIntegrator for ClosedForm {
    fn name(&self) -> &'static str {
        "closed"
    }

    fn integrals(&self, trace: f64, b_det: f64, h: f64) -> Result<Integrals> {
        check_shifter(trace, b_det, h)?;
        let t = 0.5 * h * trace;
        let beta = 0.25 * h * h * b_det;
        let disc = Complex64::new(t * t - 4.0 * beta, 0.0).sqrt();
        let sgn = if t >= 0.0 { 1.0 } else { -1.0 };
        let k1 = 0.5 * (Complex64::new(t, 0.0) + sgn * disc);
        let k2 = if k1.norm() > 0.0 { Complex64::new(beta, 0.0) / k1 } else { Complex64::new(0.0, 0.0) };
        let kmax = k1.norm().max(k2.norm());
        let sep = (k1 - k2).norm();
        let mut j = [Complex64::new(0.0, 0.0); 5];
        if kmax < 0.5 || sep < 0.2 * kmax {
            // Σ_n h_n(k1, k2) m_{n+k} with h_n the complete homogeneous polynomial
            let mut hn = Complex64::new(1.0, 0.0);
            let mut k1n = Complex64::new(1.0, 0.0);
            let mut n = 0usize;
            loop {
                for (k, jk) in j.iter_mut().enumerate() {
                    *jk += hn * moment(n + k);
                }
                n += 1;
                k1n *= k1;
                hn = hn * k2 + k1n;
                if (n > 4 && hn.norm() < 1e-18 * (1.0 + j[0].norm())) || n > 20000 {
                    break;
                }
            }
        } else {
            let f1 = single_factor(k1);
            let f2 = single_factor(k2);
            for k in 0..5 {
                j[k] = (k1 * f1[k] - k2 * f2[k]) / (k1 - k2);
            }
        }
        let mut out = [0.0; 5];
        let mut scale = 0.5 * h;
        for k in 0..5 {
            out[k] = scale * j[k].re;
            scale *= 0.5 * h;
        }
        Ok(out)
    }
}

/// Literal closed-form expressions with arctangent and logarithm terms, evaluated in complex
/// arithmetic so that one expression covers both 4b > T² and 4b < T². The I2 term in
/// 2hT/(4+bh²) is an artanh and the ln r coefficient of I4 is 6(2bT − T³). Undefined for
/// b = 0 or 4b = T².
pub struct LiteralClosedForm;

impl ThicknessIntegrator for LiteralClosedForm {
    fn name(&self) -> &'static str {
        "closed_literal"
    }

    fn integrals(&self, trace: f64, b_det: f64, h: f64) -> Result<Integrals> {
        check_shifter(trace, b_det, h)?;
        let c = |x: f64| Complex64::new(x, 0.0);
        let (t, b) = (c(trace), c(b_det));
        let hc = c(h);
        let p = (4.0 * b - t * t).sqrt();
        if b_det == 0.0 || p.norm() == 0.0 {
            return Err(ShellError::InvalidMaterial("literal closed form undefined for b = 0 or 4b = T²".into()));
        }
        let m = (b * hc - t) / p;
        let n = (b * hc + t) / p;
        let r = 4.0 + b * hc * hc + 2.0 * hc * t;
        let s = 4.0 + b * hc * hc - 2.0 * hc * t;
        let at = m.atan() + n.atan();
        let i0 = 2.0 / p * at;
        let i1 = (2.0 * t * at + p * ((8.0 + 2.0 * b * hc * hc) / r - 1.0).ln()) / (2.0 * b * p);
        let i2 = (b * hc * p - (2.0 * b - t * t) * at - t * p * (2.0 * hc * t / (4.0 + b * hc * hc)).atanh())
            / (b * b * p);
        let i3 = ((6.0 * b * t - 2.0 * t.powi(3)) * (-n).atan()
            + (2.0 * t.powi(3) - 6.0 * b * t) * m.atan()
            + p * (2.0 * b * hc * t + (t * t - b) * s.ln() + (b - t * t) * r.ln()))
            / (2.0 * b.powi(3) * p);
        let q = 2.0 * b * b - 4.0 * b * t * t + t.powi(4);
        let i4 = (-12.0 * q * (-n).atan()
            + 12.0 * q * m.atan()
            + p * (b * hc * (-12.0 * b + b * b * hc * hc + 12.0 * t * t)
                + 6.0 * t * (t * t - 2.0 * b) * s.ln()
                + 6.0 * (2.0 * b * t - t.powi(3)) * r.ln()))
            / (12.0 * b.powi(4) * p);
        Ok([i0.re, i1.re, i2.re, i3.re, i4.re])
    }
}

/// Closed form above a curviness threshold, quadrature below it.
pub struct Switched {
    pub closed: Arc<dyn ThicknessIntegrator>,
    pub fallback: Arc<dyn ThicknessIntegrator>,
    pub threshold: f64,
}

impl ThicknessIntegrator for Switched {
    fn name(&self) -> &'static str {
        "switched"
    }

    fn integrals(&self, trace: f64, b_det: f64, h: f64) -> Result<Integrals> {
        if trace.abs() * h < self.threshold {
            self.fallback.integrals(trace, b_det, h)
        } else {
            self.closed.integrals(trace, b_det, h)
        }
    }
}

/// Default small-curviness switch.
pub const DEFAULT_SWITCH_KH: f64 = 0.05;

pub fn integrator_registry() -> Registry<dyn ThicknessIntegrator> {
    let mut r: Registry<dyn ThicknessIntegrator> = Registry::new("thickness integrator");
    let closed: Arc<dyn ThicknessIntegrator> = Arc::new(ClosedForm);
    let quad: Arc<dyn ThicknessIntegrator> = Arc::new(Quadrature::new(16));
    r.register(
        "switched",
        Arc::new(Switched { closed: closed.clone(), fallback: quad.clone(), threshold: DEFAULT_SWITCH_KH }),
    );
    r.register("closed", closed);
    r.register("closed_literal", Arc::new(LiteralClosedForm));
    r.register("quadrature", quad);
    r
}
