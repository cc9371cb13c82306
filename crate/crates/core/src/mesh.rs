//! Knot-span elements with precomputed Gauss-point basis data.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShellError};
use crate::nurbs::NurbsSurface;
use crate::quadrature::GaussRule;

/// Points per parametric direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GaussChoice {
    /// (p+1)×(q+1).
    #[default]
    DegreePlusOne,
    /// p×p, as in the reference benchmarks.
    Degree,
    /// Fixed count per direction.
    Points(usize),
}

impl GaussChoice {
    fn count(self, degree: usize) -> usize {
        match self {
            GaussChoice::DegreePlusOne => degree + 1,
            GaussChoice::Degree => degree.max(1),
            GaussChoice::Points(n) => n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussPoint {
    pub xi: f64,
    pub eta: f64,
    /// Parametric weight including the span Jacobian.
    pub weight: f64,
    /// Per supporting control point: [R, R_1, R_2, R_11, R_22, R_12].
    pub basis: Vec<[f64; 6]>,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub span_u: usize,
    pub span_v: usize,
    pub bounds: [[f64; 2]; 2],
    /// Net indices of the supporting control points.
    pub support: Vec<usize>,
    pub points: Vec<GaussPoint>,
}

#[derive(Debug, Clone)]
pub struct ElementMesh {
    pub elements: Vec<Element>,
    /// Offset of each element's first Gauss point in flat per-point arrays.
    pub offsets: Vec<usize>,
    pub num_points: usize,
}

impl ElementMesh {
    pub fn new(surface: &NurbsSurface, choice: GaussChoice) -> Result<Self> {
        let (ku, kv) = (surface.knots_u(), surface.knots_v());
        let (nu, nv) = (choice.count(ku.degree()), choice.count(kv.degree()));
        if nu == 0 || nv == 0 {
            return Err(ShellError::Input("Gauss rule needs at least one point".into()));
        }
        let (ru, rv) = (GaussRule::new(nu), GaussRule::new(nv));
        let mut elements = Vec::new();
        let mut offsets = Vec::new();
        let mut total = 0;
        for &su in &ku.spans() {
            let (u0, u1) = (ku.values()[su], ku.values()[su + 1]);
            for &sv in &kv.spans() {
                let (v0, v1) = (kv.values()[sv], kv.values()[sv + 1]);
                let mut points = Vec::with_capacity(nu * nv);
                let mut support = Vec::new();
                for (xi, wu) in ru.mapped(u0, u1) {
                    for (eta, wv) in rv.mapped(v0, v1) {
                        let b = surface.basis_on_span(su, sv, xi, eta);
                        if support.is_empty() {
                            support = b.indices.clone();
                        }
                        points.push(GaussPoint { xi, eta, weight: wu * wv, basis: b.values });
                    }
                }
                offsets.push(total);
                total += points.len();
                elements.push(Element { span_u: su, span_v: sv, bounds: [[u0, u1], [v0, v1]], support, points });
            }
        }
        Ok(ElementMesh { elements, offsets, num_points: total })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}
