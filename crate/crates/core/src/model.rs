//! Discrete shell model: geometry, mesh, constraints, loads and monitored quantities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constitutive::{ConstitutiveModel, Material};
use crate::error::{Result, ShellError};
use crate::mesh::{ElementMesh, GaussChoice};
use crate::nurbs::{combine, NurbsSurface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    XiMin,
    XiMax,
    EtaMin,
    EtaMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }
}

const ALL_AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

fn one() -> usize {
    1
}

/// Boundary conditions expressed on control-point rows counted from an edge (row 0 on the edge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Constraint {
    /// Listed components fixed on the first `rows` rows.
    Fixed {
        edge: Edge,
        components: Vec<Axis>,
        #[serde(default = "one")]
        rows: usize,
    },
    /// All components of the first two rows fixed (zero displacement and rotation).
    Clamped { edge: Edge },
    /// All components of the edge row fixed.
    Hinged { edge: Edge },
    /// Symmetry plane with the given normal: the normal component of the edge row is fixed and the
    /// in-plane components of the second row follow the edge row (no rotation across the plane).
    Symmetry { edge: Edge, normal: Axis },
    /// Rigid in its own plane: the two components orthogonal to `normal` fixed on the edge row.
    Diaphragm { edge: Edge, normal: Axis },
    /// Listed components of the second row follow the edge row.
    Tie { edge: Edge, components: Vec<Axis> },
    /// Components of one control point (net indices) fixed.
    Point { index: [usize; 2], components: Vec<Axis> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Load {
    /// Force at a parametric point, distributed to control points by basis values.
    Point { at: [f64; 2], force: [f64; 3] },
    /// Force per unit reference area.
    Traction { traction: [f64; 3] },
}

/// Displacement component at a parametric point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monitor {
    pub name: String,
    pub at: [f64; 2],
    pub component: Axis,
}

/// Reduced equation number (if free) for each of the 3·N·M displacement components.
#[derive(Debug, Clone)]
pub struct DofMap {
    eq: Vec<Option<usize>>,
    n_eq: usize,
}

impl DofMap {
    /// `ties` are (follower, leader) pairs of full DOF indices; fixed DOFs propagate through ties.
    pub fn new(n_dof: usize, fixed: &[usize], ties: &[(usize, usize)]) -> Result<Self> {
        let mut parent: Vec<usize> = (0..n_dof).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for &d in fixed.iter().chain(ties.iter().flat_map(|t| [&t.0, &t.1])) {
            if d >= n_dof {
                return Err(ShellError::ConstraintConflict(format!("DOF {d} out of range ({n_dof} DOFs)")));
            }
        }
        for &(a, b) in ties {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            // smaller index becomes the representative so numbering is order-independent
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
        let mut is_fixed = vec![false; n_dof];
        for &d in fixed {
            let r = root(&mut parent, d);
            is_fixed[r] = true;
        }
        let mut eq_of_root = vec![None; n_dof];
        let mut eq = vec![None; n_dof];
        let mut n_eq = 0;
        for d in 0..n_dof {
            let r = root(&mut parent, d);
            if is_fixed[r] {
                continue;
            }
            let e = *eq_of_root[r].get_or_insert_with(|| {
                n_eq += 1;
                n_eq - 1
            });
            eq[d] = Some(e);
        }
        if n_eq == 0 {
            return Err(ShellError::ConstraintConflict("every DOF is constrained".into()));
        }
        Ok(DofMap { eq, n_eq })
    }

    pub fn equation(&self, dof: usize) -> Option<usize> {
        self.eq[dof]
    }

    pub fn equations(&self) -> &[Option<usize>] {
        &self.eq
    }

    pub fn num_equations(&self) -> usize {
        self.n_eq
    }

    pub fn num_dofs(&self) -> usize {
        self.eq.len()
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.eq.iter().map(|e| e.map_or(0.0, |k| reduced[k])).collect()
    }

    /// Tᵀ v: sum full-length entries into equations.
    pub fn reduce(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_eq];
        for (e, v) in self.eq.iter().zip(full) {
            if let Some(k) = e {
                out[*k] += v;
            }
        }
        out
    }
}

/// Net indices of the k-th control-point row parallel to an edge.
pub fn edge_row(surface: &NurbsSurface, edge: Edge, k: usize) -> Result<Vec<usize>> {
    let (n, m) = surface.net_size();
    let limit = match edge {
        Edge::XiMin | Edge::XiMax => n,
        Edge::EtaMin | Edge::EtaMax => m,
    };
    if k >= limit {
        return Err(ShellError::ConstraintConflict(format!("row {k} from {edge:?} exceeds the control net")));
    }
    Ok(match edge {
        Edge::XiMin => (0..m).map(|j| surface.index(k, j)).collect(),
        Edge::XiMax => (0..m).map(|j| surface.index(n - 1 - k, j)).collect(),
        Edge::EtaMin => (0..n).map(|i| surface.index(i, k)).collect(),
        Edge::EtaMax => (0..n).map(|i| surface.index(i, m - 1 - k)).collect(),
    })
}

/// Fixed DOFs and (follower, leader) tie pairs.
pub type ExpandedConstraints = (Vec<usize>, Vec<(usize, usize)>);

/// Expands boundary conditions into fixed DOFs and (follower, leader) ties.
pub fn expand_constraints(surface: &NurbsSurface, constraints: &[Constraint]) -> Result<ExpandedConstraints> {
    let mut fixed = Vec::new();
    let mut ties = Vec::new();
    let fix_rows = |fixed: &mut Vec<usize>, edge: Edge, rows: usize, comps: &[Axis]| -> Result<()> {
        for k in 0..rows {
            for p in edge_row(surface, edge, k)? {
                fixed.extend(comps.iter().map(|c| 3 * p + c.index()));
            }
        }
        Ok(())
    };
    let tie_rows = |ties: &mut Vec<(usize, usize)>, edge: Edge, comps: &[Axis]| -> Result<()> {
        let lead = edge_row(surface, edge, 0)?;
        let follow = edge_row(surface, edge, 1)?;
        for (l, f) in lead.iter().zip(&follow) {
            ties.extend(comps.iter().map(|c| (3 * f + c.index(), 3 * l + c.index())));
        }
        Ok(())
    };
    for c in constraints {
        match c {
            Constraint::Fixed { edge, components, rows } => fix_rows(&mut fixed, *edge, *rows, components)?,
            Constraint::Clamped { edge } => fix_rows(&mut fixed, *edge, 2, &ALL_AXES)?,
            Constraint::Hinged { edge } => fix_rows(&mut fixed, *edge, 1, &ALL_AXES)?,
            Constraint::Symmetry { edge, normal } => {
                fix_rows(&mut fixed, *edge, 1, &[*normal])?;
                tie_rows(&mut ties, *edge, &normal.others())?;
            }
            Constraint::Diaphragm { edge, normal } => fix_rows(&mut fixed, *edge, 1, &normal.others())?,
            Constraint::Tie { edge, components } => tie_rows(&mut ties, *edge, components)?,
            Constraint::Point { index, components } => {
                let (n, m) = surface.net_size();
                if index[0] >= n || index[1] >= m {
                    return Err(ShellError::ConstraintConflict(format!("control point {index:?} outside {n}x{m} net")));
                }
                let p = surface.index(index[0], index[1]);
                fixed.extend(components.iter().map(|c| 3 * p + c.index()));
            }
        }
    }
    Ok((fixed, ties))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeometricVariant {
    /// Includes the −(M:b) g^{αβ} n n contribution of the normal's second variation.
    #[default]
    Consistent,
    /// Without that contribution.
    Truncated,
}

pub struct Model {
    pub surface: NurbsSurface,
    pub thickness: f64,
    pub material: Material,
    pub mesh: ElementMesh,
    pub dofs: DofMap,
    pub constraints: Vec<Constraint>,
    pub loads: Vec<Load>,
    pub monitors: Vec<Monitor>,
    pub constitutive: Arc<dyn ConstitutiveModel>,
    pub geometric: GeometricVariant,
}

pub struct ModelOptions {
    pub gauss: GaussChoice,
    pub geometric: GeometricVariant,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { gauss: GaussChoice::DegreePlusOne, geometric: GeometricVariant::Consistent }
    }
}

impl Model {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        surface: NurbsSurface,
        thickness: f64,
        material: Material,
        constraints: Vec<Constraint>,
        loads: Vec<Load>,
        monitors: Vec<Monitor>,
        constitutive: Arc<dyn ConstitutiveModel>,
        options: ModelOptions,
    ) -> Result<Self> {
        if !(thickness > 0.0) || !thickness.is_finite() {
            return Err(ShellError::Input(format!("thickness must be positive, got {thickness}")));
        }
        material.validate()?;
        let (ku, kv) = (surface.knots_u(), surface.knots_v());
        let check = |at: [f64; 2]| -> Result<()> {
            ku.find_span(at[0])?;
            kv.find_span(at[1])?;
            Ok(())
        };
        for l in &loads {
            if let Load::Point { at, .. } = l {
                check(*at).map_err(|e| ShellError::InvalidLoad(format!("point load at {at:?}: {e}")))?;
            }
        }
        for mon in &monitors {
            check(mon.at)?;
        }
        let mesh = ElementMesh::new(&surface, options.gauss)?;
        let (fixed, ties) = expand_constraints(&surface, &constraints)?;
        let n = surface.points().len();
        let dofs = DofMap::new(3 * n, &fixed, &ties)?;
        Ok(Model {
            surface,
            thickness,
            material,
            mesh,
            dofs,
            constraints,
            loads,
            monitors,
            constitutive,
            geometric: options.geometric,
        })
    }

    pub fn num_points(&self) -> usize {
        self.surface.points().len()
    }

    /// Total reference load vector Q_f on the reduced equations.
    pub fn external_forces(&self) -> Result<Vec<f64>> {
        let mut full = vec![0.0; 3 * self.num_points()];
        for load in &self.loads {
            match load {
                Load::Point { at, force } => {
                    let b = self.surface.basis_derivatives(at[0], at[1])?;
                    for (&i, v) in b.indices.iter().zip(&b.values) {
                        for k in 0..3 {
                            full[3 * i + k] += v[0] * force[k];
                        }
                    }
                }
                Load::Traction { traction } => {
                    for e in &self.mesh.elements {
                        for gp in &e.points {
                            let d = self.jet(e, &gp.basis, None);
                            let da = d.d1[0].cross(&d.d1[1]).norm() * gp.weight;
                            for (&i, v) in e.support.iter().zip(&gp.basis) {
                                for k in 0..3 {
                                    full[3 * i + k] += v[0] * traction[k] * da;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(self.dofs.reduce(&full))
    }

    /// Position jet at a Gauss point, optionally displaced by full-length `q`.
    pub(crate) fn jet(&self, e: &crate::mesh::Element, basis: &[[f64; 6]], q: Option<&[f64]>) -> crate::nurbs::SurfaceDerivatives {
        let sb = crate::nurbs::SurfaceBasis { span_u: e.span_u, span_v: e.span_v, indices: e.support.clone(), values: basis.to_vec() };
        combine(&sb, |i| self.current_position(i, q))
    }

    pub fn current_position(&self, i: usize, q: Option<&[f64]>) -> nalgebra::Vector3<f64> {
        let x = self.surface.position(i);
        match q {
            Some(q) => x + nalgebra::Vector3::new(q[3 * i], q[3 * i + 1], q[3 * i + 2]),
            None => x,
        }
    }

    /// Displacement vector u(ξ, η) for a full-length control displacement vector.
    pub fn displacement_at(&self, q: &[f64], at: [f64; 2]) -> Result<nalgebra::Vector3<f64>> {
        let b = self.surface.basis_derivatives(at[0], at[1])?;
        Ok(combine(&b, |i| nalgebra::Vector3::new(q[3 * i], q[3 * i + 1], q[3 * i + 2])).r)
    }

    pub fn monitor_values(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.monitors.iter().map(|m| Ok(self.displacement_at(q, m.at)?[m.component.index()])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::default_models;
    use crate::nurbs::KnotVector;

    fn unit_plate(n: usize, p: usize) -> NurbsSurface {
        let k = KnotVector::uniform(1, 1, 0).unwrap();
        let s = NurbsSurface::new(
            k.clone(),
            k,
            vec![[0.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 1.0], [1.0, 0.0, 0.0, 1.0], [1.0, 1.0, 0.0, 1.0]],
        )
        .unwrap();
        s.refine(n, n, Some(p), p - 1).unwrap()
    }

    fn model(loads: Vec<Load>, constraints: Vec<Constraint>) -> Model {
        Model::new(
            unit_plate(3, 2),
            0.1,
            Material::new(1.0, 0.3).unwrap(),
            constraints,
            loads,
            vec![],
            default_models().get("D0").unwrap(),
            ModelOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn ties_share_equations_and_fixes_propagate() {
        let d = DofMap::new(6, &[0], &[(3, 0), (4, 1), (5, 4)]).unwrap();
        assert_eq!(d.equation(0), None);
        assert_eq!(d.equation(3), None);
        assert_eq!(d.equation(1), d.equation(4));
        assert_eq!(d.equation(5), d.equation(1));
        assert_eq!(d.num_equations(), 2);
        assert_eq!(d.reduce(&d.expand(&[2.0, 3.0])), vec![6.0, 3.0]);
        assert!(DofMap::new(2, &[0, 1], &[]).is_err());
        assert!(DofMap::new(2, &[5], &[]).is_err());
    }

    #[test]
    fn constraint_expansion_counts() {
        let s = unit_plate(3, 2); // 5×5 net
        let (f, t) = expand_constraints(&s, &[Constraint::Clamped { edge: Edge::XiMin }]).unwrap();
        assert_eq!((f.len(), t.len()), (30, 0));
        let (f, t) = expand_constraints(&s, &[Constraint::Symmetry { edge: Edge::EtaMax, normal: Axis::Y }]).unwrap();
        assert_eq!((f.len(), t.len()), (5, 10));
        assert!(f.iter().all(|d| d % 3 == 1));
        let (f, _) = expand_constraints(&s, &[Constraint::Diaphragm { edge: Edge::XiMax, normal: Axis::X }]).unwrap();
        assert!(f.iter().all(|d| d % 3 != 0) && f.len() == 10);
        assert!(expand_constraints(&s, &[Constraint::Fixed { edge: Edge::XiMin, components: vec![Axis::X], rows: 9 }]).is_err());
    }

    #[test]
    fn corner_point_load_is_interpolatory() {
        let m = model(vec![Load::Point { at: [1.0, 1.0], force: [0.0, 0.0, -2.0] }], vec![]);
        let q = m.external_forces().unwrap();
        let nz: Vec<_> = q.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nz, vec![&-2.0]);
    }

    #[test]
    fn interior_point_load_partition_of_unity() {
        let m = model(vec![Load::Point { at: [0.37, 0.61], force: [0.0, 0.0, 5.0] }], vec![]);
        let q = m.external_forces().unwrap();
        assert!((q.iter().sum::<f64>() - 5.0).abs() < 1e-13);
        assert!(q.iter().filter(|v| **v != 0.0).count() > 1);
    }

    #[test]
    fn traction_totals_area() {
        let m = model(vec![Load::Traction { traction: [0.0, 0.0, 3.0] }], vec![]);
        let q = m.external_forces().unwrap();
        assert!((q.iter().sum::<f64>() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn load_outside_domain_rejected() {
        let r = Model::new(
            unit_plate(2, 2),
            0.1,
            Material::new(1.0, 0.3).unwrap(),
            vec![],
            vec![Load::Point { at: [1.5, 0.0], force: [1.0, 0.0, 0.0] }],
            vec![],
            default_models().get("D0").unwrap(),
            ModelOptions::default(),
        );
        assert!(matches!(r, Err(ShellError::InvalidLoad(_))));
    }

    #[test]
    fn constraint_json_rejects_unknown_keys() {
        let ok: Constraint = serde_json::from_str(r#"{"type":"symmetry","edge":"xi_min","normal":"x"}"#).unwrap();
        assert_eq!(ok, Constraint::Symmetry { edge: Edge::XiMin, normal: Axis::X });
        assert!(serde_json::from_str::<Constraint>(r#"{"type":"hinged","edge":"xi_min","bogus":1}"#).is_err());
    }
}
