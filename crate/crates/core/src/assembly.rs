//! Updated-Lagrangian internal forces, tangent stiffness and section-force transport.

use nalgebra::{SMatrix, Vector3};
use rayon::prelude::*;

use crate::constitutive::Matrix6;
use crate::error::Result;
use crate::kinematics::{build_strain_operator, Voigt6};
use crate::mesh::Element;
use crate::metric::{compute_metric, MidsurfaceMetric};
use crate::model::{GeometricVariant, Model};
use crate::skyline::SkylineMatrix;

pub type Matrix15 = SMatrix<f64, 15, 15>;

/// Converged state at one Gauss point.
#[derive(Debug, Clone)]
pub struct GaussState {
    pub metric: MidsurfaceMetric,
    /// [N¹¹, N²², N¹², M¹¹, M²², M¹²] per unit area of this configuration.
    pub f: Voigt6,
    /// Constitutive tensor of this configuration.
    pub d: Matrix6,
}

/// Converged configuration: control displacements (all 3·N·M components) and Gauss-point states.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub q: Vec<f64>,
    pub lpf: f64,
    pub states: Vec<GaussState>,
}

/// Trial state at one Gauss point for displacements q relative to a converged base.
#[derive(Debug, Clone)]
pub struct TrialState {
    pub metric: MidsurfaceMetric,
    pub f: Voigt6,
}

pub struct Evaluation {
    /// F on the reduced equations.
    pub internal: Vec<f64>,
    pub trial: Vec<TrialState>,
}

/// Elements processed per parallel batch before the sequential scatter.
const BATCH: usize = 128;

fn jet(e: &Element, basis: &[[f64; 6]], model: &Model, q: &[f64]) -> ([Vector3<f64>; 2], [Vector3<f64>; 3]) {
    let mut d1 = [Vector3::zeros(); 2];
    let mut d2 = [Vector3::zeros(); 3];
    for (&i, r) in e.support.iter().zip(basis) {
        let x = model.current_position(i, Some(q));
        d1[0] += r[1] * x;
        d1[1] += r[2] * x;
        d2[0] += r[3] * x;
        d2[1] += r[4] * x;
        d2[2] += r[5] * x;
    }
    (d1, d2)
}

/// Strain increment between two metrics: [½Δg11, ½Δg22, Δg12, Δb11, Δb22, 2Δb12].
pub fn strain_increment(from: &MidsurfaceMetric, to: &MidsurfaceMetric) -> Voigt6 {
    let dg = to.g_cov - from.g_cov;
    let db = to.b_cov - from.b_cov;
    [0.5 * dg[(0, 0)], 0.5 * dg[(1, 1)], dg[(0, 1)], db[(0, 0)], db[(1, 1)], 2.0 * db[(0, 1)]]
}

fn mat6_vec(d: &Matrix6, e: &Voigt6) -> Voigt6 {
    let mut out = [0.0; 6];
    for i in 0..6 {
        for j in 0..6 {
            out[i] += d[(i, j)] * e[j];
        }
    }
    out
}

/// Generalized section-force matrix G acting on velocity jets
/// w = [v_,1, v_,2, v_,11, v_,22, v_,12] per Cartesian component, index 5 m + slot.
pub fn geometric_matrix(m: &MidsurfaceMetric, f: &Voigt6, variant: GeometricVariant) -> Matrix15 {
    let nn = [[f[0], f[2]], [f[2], f[1]]];
    let mm = [[f[3], f[5]], [f[5], f[4]]];
    let mut gam_m = [0.0; 2];
    for (nu, gm) in gam_m.iter_mut().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                *gm += mm[a][b] * m.gamma[nu][a][b];
            }
        }
    }
    let mut mb = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            mb += mm[a][b] * m.b_cov[(a, b)];
        }
    }
    let ms = [mm[0][0], mm[1][1], 2.0 * mm[0][1]];
    let n = &m.g[2];
    let gc = &m.g_contra;
    let consistent = variant == GeometricVariant::Consistent;
    let mut g = Matrix15::zeros();
    for r in 0..3 {
        for c in 0..3 {
            let delta = if r == c { 1.0 } else { 0.0 };
            for a in 0..2 {
                for b in 0..2 {
                    let mut v = gam_m[a] * gc[b][r] * n[c] + gam_m[b] * n[r] * gc[a][c] + delta * nn[a][b];
                    if consistent {
                        v -= mb * m.g_inv[(a, b)] * n[r] * n[c];
                    }
                    g[(5 * r + a, 5 * c + b)] = v;
                }
                for s in 0..3 {
                    g[(5 * r + a, 5 * c + 2 + s)] = -ms[s] * n[r] * gc[a][c];
                    g[(5 * r + 2 + s, 5 * c + a)] = -ms[s] * gc[a][r] * n[c];
                }
            }
        }
    }
    g
}

struct ElementResult {
    fe: Vec<f64>,
    ke: Option<Vec<f64>>,
    trial: Vec<TrialState>,
}

impl Model {
    /// Undeformed, stress-free configuration.
    pub fn initial_configuration(&self) -> Result<Configuration> {
        let q = vec![0.0; 3 * self.num_points()];
        let per_element: Vec<Vec<GaussState>> = self
            .mesh
            .elements
            .par_iter()
            .map(|e| {
                e.points
                    .iter()
                    .map(|gp| {
                        let (d1, d2) = jet(e, &gp.basis, self, &q);
                        let metric = compute_metric(&d1, &d2)?;
                        let d = self.constitutive.tensor(&metric, &self.material, self.thickness)?.d;
                        Ok(GaussState { metric, f: [0.0; 6], d })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Configuration { q, lpf: 0.0, states: per_element.into_iter().flatten().collect() })
    }

    /// Skyline matrix with the profile of the reduced equations.
    pub fn new_tangent(&self) -> SkylineMatrix {
        let eqs: Vec<Vec<usize>> = self
            .mesh
            .elements
            .iter()
            .map(|e| {
                e.support.iter().flat_map(|&i| (0..3).filter_map(move |k| self.dofs.equation(3 * i + k))).collect()
            })
            .collect();
        SkylineMatrix::from_connectivity(self.dofs.num_equations(), eqs.iter().map(|v| v.as_slice()))
    }

    fn element_eqs(&self, e: &Element) -> Vec<Option<usize>> {
        e.support.iter().flat_map(|&i| (0..3).map(move |k| self.dofs.equation(3 * i + k))).collect()
    }

    fn element(&self, ei: usize, base: &Configuration, q: &[f64], want_k: bool) -> Result<ElementResult> {
        let e = &self.mesh.elements[ei];
        let off = self.mesh.offsets[ei];
        let ns = e.support.len();
        let nd = 3 * ns;
        let mut fe = vec![0.0; nd];
        let mut ke = if want_k { Some(vec![0.0; nd * nd]) } else { None };
        let mut trial = Vec::with_capacity(e.points.len());
        for (k, gp) in e.points.iter().enumerate() {
            let st = &base.states[off + k];
            let (d1, d2) = jet(e, &gp.basis, self, q);
            let metric = compute_metric(&d1, &d2)?;
            let de = strain_increment(&st.metric, &metric);
            // resultants per unit base area; the stored value is rescaled to the current area
            let inc = mat6_vec(&st.d, &de);
            let s: Voigt6 = std::array::from_fn(|i| st.f[i] + inc[i]);
            let wb = st.metric.sqrt_g * gp.weight;
            let ratio = st.metric.sqrt_g / metric.sqrt_g;
            trial.push(TrialState { f: s.map(|v| v * ratio), metric });

            let op = build_strain_operator(&metric, &gp.basis);
            for (c, col) in op.columns.iter().enumerate() {
                fe[c] += wb * (0..6).map(|r| col[r] * s[r]).sum::<f64>();
            }
            if let Some(ke) = ke.as_mut() {
                let dcols: Vec<Voigt6> = op.columns.iter().map(|c| mat6_vec(&st.d, c)).collect();
                for a in 0..nd {
                    let ca = &op.columns[a];
                    for b in a..nd {
                        let v = wb * (0..6).map(|r| ca[r] * dcols[b][r]).sum::<f64>();
                        ke[a * nd + b] += v;
                    }
                }
                let g = geometric_matrix(&metric, &s, self.geometric);
                // t[J][n][5m + slot] = Σ_c G[(m, slot), (n, c)] r_J[c]
                let mut t = vec![[[0.0; 15]; 3]; ns];
                for (j, rj) in gp.basis.iter().enumerate() {
                    for n in 0..3 {
                        for row in 0..15 {
                            let mut v = 0.0;
                            for c in 0..5 {
                                v += g[(row, 5 * n + c)] * rj[c + 1];
                            }
                            t[j][n][row] = v;
                        }
                    }
                }
                for (i, ri) in gp.basis.iter().enumerate() {
                    for m in 0..3 {
                        let a = 3 * i + m;
                        for (j, tj) in t.iter().enumerate() {
                            for n in 0..3 {
                                let b = 3 * j + n;
                                if b < a {
                                    continue;
                                }
                                let mut v = 0.0;
                                for s in 0..5 {
                                    v += ri[s + 1] * tj[n][5 * m + s];
                                }
                                ke[a * nd + b] += wb * v;
                            }
                        }
                    }
                }
            }
        }
        if let Some(ke) = ke.as_mut() {
            for a in 0..nd {
                for b in 0..a {
                    ke[a * nd + b] = ke[b * nd + a];
                }
            }
        }
        Ok(ElementResult { fe, ke, trial })
    }

    /// Internal forces (and optionally the tangent, assembled into `tangent`) at full-length
    /// displacements `q`, with section forces transported from the converged `base`.
    pub fn evaluate(&self, base: &Configuration, q: &[f64], mut tangent: Option<&mut SkylineMatrix>) -> Result<Evaluation> {
        let want_k = tangent.is_some();
        if let Some(k) = tangent.as_deref_mut() {
            k.clear();
        }
        let mut internal = vec![0.0; self.dofs.num_equations()];
        let mut trial = Vec::with_capacity(self.mesh.num_points);
        let n_el = self.mesh.len();
        let mut start = 0;
        while start < n_el {
            let end = (start + BATCH).min(n_el);
            let results: Vec<ElementResult> =
                (start..end).into_par_iter().map(|ei| self.element(ei, base, q, want_k)).collect::<Result<_>>()?;
            for (ei, r) in (start..end).zip(results) {
                let eqs = self.element_eqs(&self.mesh.elements[ei]);
                for (e, v) in eqs.iter().zip(&r.fe) {
                    if let Some(k) = e {
                        internal[*k] += v;
                    }
                }
                if let (Some(k), Some(ke)) = (tangent.as_deref_mut(), r.ke.as_ref()) {
                    k.scatter(&eqs, ke);
                }
                trial.extend(r.trial);
            }
            start = end;
        }
        Ok(Evaluation { internal, trial })
    }

    /// Accept trial states as a new converged configuration, refreshing the constitutive tensors.
    pub fn commit(&self, q: Vec<f64>, lpf: f64, trial: Vec<TrialState>) -> Result<Configuration> {
        let states = trial
            .into_par_iter()
            .map(|t| {
                let d = self.constitutive.tensor(&t.metric, &self.material, self.thickness)?.d;
                Ok(GaussState { metric: t.metric, f: t.f, d })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Configuration { q, lpf, states })
    }

    /// update_state: base configuration advanced by a full-length increment Δq.
    pub fn update_state(&self, base: &Configuration, dq: &[f64], lpf: f64) -> Result<Configuration> {
        let q: Vec<f64> = base.q.iter().zip(dq).map(|(a, b)| a + b).collect();
        let ev = self.evaluate(base, &q, None)?;
        self.commit(q, lpf, ev.trial)
    }
}
