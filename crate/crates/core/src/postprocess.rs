//! Derived fields of converged configurations: curviness maps, reference strains at material
//! points and outer-fiber strains/stresses.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{Matrix2, Vector3};
use serde::Serialize;

use crate::assembly::strain_increment;
use crate::constitutive::equidistant_stress;
use crate::error::Result;
use crate::kinematics::{equidistant_strain, physical_strain, DistributionMode};
use crate::metric::{compute_metric, MidsurfaceMetric};
use crate::model::Model;
use crate::nurbs::combine;

/// One field sample on the parametric grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSample {
    pub xi: f64,
    pub eta: f64,
    /// Current position.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub lpf: f64,
    #[serde(flatten)]
    pub values: BTreeMap<String, f64>,
}

/// Current position and metric evaluated from one element's side.
fn metric_on_span(
    model: &Model,
    q: Option<&[f64]>,
    span: (usize, usize),
    at: [f64; 2],
) -> Result<(Vector3<f64>, MidsurfaceMetric)> {
    let b = model.surface.basis_on_span(span.0, span.1, at[0], at[1]);
    let d = combine(&b, |i| model.current_position(i, q));
    Ok((d.r, compute_metric(&d.d1, &d.d2)?))
}

/// Position and metric at a parametric point; on element boundaries the second derivatives of
/// all adjacent elements are averaged.
pub fn metric_at(model: &Model, q: Option<&[f64]>, at: [f64; 2]) -> Result<(Vector3<f64>, MidsurfaceMetric)> {
    let su = model.surface.knots_u().spans_containing(at[0])?;
    let sv = model.surface.knots_v().spans_containing(at[1])?;
    let mut d2 = [Vector3::zeros(); 3];
    let mut first = None;
    let mut count = 0.0;
    for &a in &su {
        for &b in &sv {
            let bas = model.surface.basis_on_span(a, b, at[0], at[1]);
            let d = combine(&bas, |i| model.current_position(i, q));
            for k in 0..3 {
                d2[k] += d.d2[k];
            }
            count += 1.0;
            first.get_or_insert(d);
        }
    }
    let d = first.expect("at least one span");
    Ok((d.r, compute_metric(&d.d1, &d2.map(|v| v / count))?))
}

fn physical(t: &Matrix2<f64>, g: &Matrix2<f64>) -> [f64; 3] {
    let p = physical_strain(t, g);
    [p[(0, 0)], p[(1, 1)], p[(0, 1)]]
}

/// Grid points of every element: `grid` × `grid` equally spaced including the element edges.
fn element_grid(model: &Model, grid: usize) -> Vec<((usize, usize), [f64; 2])> {
    let n = grid.max(2);
    let mut out = Vec::new();
    for e in &model.mesh.elements {
        let [[u0, u1], [v0, v1]] = e.bounds;
        for i in 0..n {
            for j in 0..n {
                let s = i as f64 / (n - 1) as f64;
                let t = j as f64 / (n - 1) as f64;
                out.push(((e.span_u, e.span_v), [u0 + s * (u1 - u0), v0 + t * (v1 - v0)]));
            }
        }
    }
    out
}

/// Reference and current metric at a sample, as seen from one element.
pub struct SamplePoint<'a> {
    pub reference: &'a MidsurfaceMetric,
    pub current: &'a MidsurfaceMetric,
}

/// Evaluates `field` element by element on the grid and averages coincident samples.
pub fn sample_field(
    model: &Model,
    q: &[f64],
    lpf: f64,
    grid: usize,
    field: impl Fn(&SamplePoint) -> Vec<(&'static str, f64)>,
) -> Result<Vec<FieldSample>> {
    let mut raw = Vec::new();
    for (span, at) in element_grid(model, grid) {
        let (_, m0) = metric_on_span(model, None, span, at)?;
        let (x, m) = metric_on_span(model, Some(q), span, at)?;
        let values = field(&SamplePoint { reference: &m0, current: &m })
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        raw.push(FieldSample { xi: at[0], eta: at[1], x: x.x, y: x.y, z: x.z, lpf, values });
    }
    Ok(nodal_average(raw))
}

/// Kh = |tr b| h of the deformed midsurface. `Kh_display` clamps at `threshold` for plotting; the
/// raw value is kept.
pub fn curviness_field(model: &Model, q: &[f64], lpf: f64, grid: usize, threshold: f64) -> Result<Vec<FieldSample>> {
    let h = model.thickness;
    sample_field(model, q, lpf, grid, |p| {
        let kh = p.current.curviness(h);
        vec![("Kh", kh), ("Kh_display", kh.min(threshold))]
    })
}

/// Total reference strains ε = ½(g* − g) and curvature change b* − b, physical components with
/// respect to the reference metric, plus the current curviness.
pub fn strain_field(model: &Model, q: &[f64], lpf: f64, grid: usize) -> Result<Vec<FieldSample>> {
    let h = model.thickness;
    sample_field(model, q, lpf, grid, |p| {
        let g = &p.reference.g_cov;
        let e = physical(&(0.5 * (p.current.g_cov - g)), g);
        let k = physical(&(p.current.b_cov - p.reference.b_cov), g);
        vec![
            ("eps11", e[0]),
            ("eps22", e[1]),
            ("eps12", e[2]),
            ("kappa11", k[0]),
            ("kappa22", k[1]),
            ("kappa12", k[2]),
            ("Kh", p.current.curviness(h)),
        ]
    })
}

/// Arithmetic mean of samples at coincident parametric locations (element-boundary averaging).
pub fn nodal_average(samples: Vec<FieldSample>) -> Vec<FieldSample> {
    const RES: f64 = 1e-10;
    let key = |s: &FieldSample| ((s.xi / RES).round() as i64, (s.eta / RES).round() as i64);
    let mut groups: BTreeMap<(i64, i64), (FieldSample, usize)> = BTreeMap::new();
    for s in samples {
        match groups.get_mut(&key(&s)) {
            Some((acc, n)) => {
                for (k, v) in s.values {
                    *acc.values.entry(k).or_insert(0.0) += v;
                }
                *n += 1;
            }
            None => {
                groups.insert(key(&s), (s, 1));
            }
        }
    }
    groups
        .into_values()
        .map(|(mut s, n)| {
            s.values.values_mut().for_each(|v| *v /= n as f64);
            s
        })
        .collect()
}

/// One JSON record per line.
pub fn write_ndjson(samples: &[FieldSample], mut w: impl Write) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reference strains at one converged state; components ordered 11, 22, 12 (tensor, not
/// engineering, shear).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrainRecord {
    pub lpf: f64,
    pub kh: f64,
    /// ½(g* − g), physical components w.r.t. the reference metric.
    pub membrane: [f64; 3],
    pub membrane_covariant: [f64; 3],
    /// Sum of per-increment curvature changes, each in physical components of its start metric.
    pub bending: [f64; 3],
    /// b* − b in physical components w.r.t. the reference metric.
    pub bending_difference: [f64; 3],
    /// b* − b, covariant (equals the covariant increment sum).
    pub bending_covariant: [f64; 3],
}

/// Follows the reference strains at a material point along a path.
pub struct ReferenceStrainTracker {
    pub at: [f64; 2],
    reference: MidsurfaceMetric,
    last: MidsurfaceMetric,
    bending: [f64; 3],
    pub history: Vec<StrainRecord>,
}

impl ReferenceStrainTracker {
    pub fn new(model: &Model, at: [f64; 2]) -> Result<Self> {
        let (_, m) = metric_at(model, None, at)?;
        Ok(ReferenceStrainTracker { at, reference: m, last: m, bending: [0.0; 3], history: Vec::new() })
    }

    pub fn observe(&mut self, model: &Model, q: &[f64], lpf: f64) -> Result<&StrainRecord> {
        let (_, m) = metric_at(model, Some(q), self.at)?;
        let db = m.b_cov - self.last.b_cov;
        let inc = physical(&db, &self.last.g_cov);
        self.bending.iter_mut().zip(inc).for_each(|(a, b)| *a += b);
        let g = &self.reference.g_cov;
        let eps = 0.5 * (m.g_cov - g);
        let dbt = m.b_cov - self.reference.b_cov;
        self.history.push(StrainRecord {
            lpf,
            kh: m.curviness(model.thickness),
            membrane: physical(&eps, g),
            membrane_covariant: [eps[(0, 0)], eps[(1, 1)], eps[(0, 1)]],
            bending: self.bending,
            bending_difference: physical(&dbt, g),
            bending_covariant: [dbt[(0, 0)], dbt[(1, 1)], dbt[(0, 1)]],
        });
        self.last = m;
        Ok(self.history.last().expect("just pushed"))
    }
}

/// Equidistant strain and stress at a fiber, physical components 11, 22, 12.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberRecord {
    pub lpf: f64,
    pub strain: [f64; 3],
    pub stress: [f64; 3],
}

/// Accumulates equidistant strain and stress increments at ζ = `fiber`·h under the chosen
/// distribution through the thickness.
pub struct OuterFiberTracker {
    pub at: [f64; 2],
    pub zeta: f64,
    pub mode: DistributionMode,
    last: MidsurfaceMetric,
    strain: [f64; 3],
    stress: [f64; 3],
    pub history: Vec<FiberRecord>,
}

impl OuterFiberTracker {
    pub fn new(model: &Model, at: [f64; 2], fiber: f64, mode: DistributionMode) -> Result<Self> {
        let (_, m) = metric_at(model, None, at)?;
        let zeta = fiber * model.thickness;
        m.shift(zeta)?;
        Ok(OuterFiberTracker { at, zeta, mode, last: m, strain: [0.0; 3], stress: [0.0; 3], history: Vec::new() })
    }

    pub fn observe(&mut self, model: &Model, q: &[f64], lpf: f64) -> Result<&FiberRecord> {
        let (_, m) = metric_at(model, Some(q), self.at)?;
        let de = strain_increment(&self.last, &m);
        let dbar = equidistant_strain(&de, &self.last, self.zeta, self.mode)?;
        let gbar = self.last.shift(self.zeta)?.metric_cov(&self.last);
        let ds = physical(&dbar, &gbar);
        let (_, sig) = equidistant_stress(&self.last, &model.material, self.zeta, &dbar)?;
        for k in 0..3 {
            self.strain[k] += ds[k];
        }
        self.stress[0] += sig[(0, 0)];
        self.stress[1] += sig[(1, 1)];
        self.stress[2] += sig[(0, 1)];
        self.history.push(FiberRecord { lpf, strain: self.strain, stress: self.stress });
        self.last = m;
        Ok(self.history.last().expect("just pushed"))
    }
}
