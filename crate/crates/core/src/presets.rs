//! Named benchmark models.
//!
//! Geometry, material and load data follow the classical nonlinear shell benchmark suite
//! (pinched cylinder with diaphragms, hinged cylindrical roof, pinched semi-cylinder, pullout of an
//! open cylinder). Symmetry reductions: one eighth for the cylinders, one quarter for the roof,
//! one half for the semi-cylinder. Point loads on symmetry planes carry the matching fraction of
//! the total force. All patches are parametrized so that g1 × g2 points away from the axis.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use crate::constitutive::Material;
use crate::continuation::{ContinuationSettings, Method, Tolerances};
use crate::error::{Result, ShellError};
use crate::kinematics::DistributionMode;
use crate::mesh::GaussChoice;
use crate::metric::compute_metric;
use crate::model::{Axis, Constraint, Edge, Load, Monitor};
use crate::model_file::{Geometry, ModelFile, Output, Refinement};
use crate::nurbs::{NurbsSurface, SurfaceJson};

pub const NAMES: [&str; 5] =
    ["pinched_cylinder_linear", "shallow_shell", "semi_cylinder", "pullout_cylinder", "pinched_cylinder_nl"];

/// Reference deflection at A of the linear pinched cylinder (8192×8192 Fourier terms).
pub const PINCHED_LINEAR_REFERENCE: f64 = 1.827158e-5;

/// Reference deflection |w_A| of the semi-cylinder at P = 2000 (benchmark-suite table, scaled
/// ×100 to the lengths used here).
pub const SEMI_CYLINDER_REFERENCE: f64 = 163.5;

/// Quadratic × linear cylindrical patch. The circular arc runs from angle `phi0` to `phi1`
/// (radians, measured in the (y, z) plane from +y) and the straight generator along x.
/// `arc_along_u` selects which parametric direction follows the arc.
fn cylinder_patch(radius: f64, phi0: f64, phi1: f64, x0: f64, x1: f64, arc_along_u: bool) -> SurfaceJson {
    let half = 0.5 * (phi1 - phi0);
    let mid = 0.5 * (phi0 + phi1);
    let w = half.cos();
    let arc = [
        [radius * phi0.cos(), radius * phi0.sin(), 1.0],
        [radius * mid.cos() / w, radius * mid.sin() / w, w],
        [radius * phi1.cos(), radius * phi1.sin(), 1.0],
    ];
    let mut pts = Vec::with_capacity(6);
    if arc_along_u {
        for a in &arc {
            for x in [x0, x1] {
                pts.push([x, a[0], a[1], a[2]]);
            }
        }
    } else {
        for x in [x0, x1] {
            for a in &arc {
                pts.push([x, a[0], a[1], a[2]]);
            }
        }
    }
    let (quad, lin) = (vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]);
    let (degree_u, degree_v, knots_u, knots_v) = if arc_along_u { (2, 1, quad, lin) } else { (1, 2, lin, quad) };
    SurfaceJson { degree_u, degree_v, knots_u, knots_v, control_points: pts }
}

const BOTH_MODES: [DistributionMode; 2] = [DistributionMode::Exact, DistributionMode::Linear];

/// Unrefined geometry of a preset.
pub fn base_surface(name: &str) -> Result<SurfaceJson> {
    Ok(match name {
        // R = 300, L = 600; η covers x ∈ [0, L/2] from the loaded mid-section to the diaphragm
        "pinched_cylinder_linear" => cylinder_patch(300.0, 0.0, FRAC_PI_2, 0.0, 300.0, true),
        // R = 100, L = 200, same layout
        "pinched_cylinder_nl" => cylinder_patch(100.0, 0.0, FRAC_PI_2, 0.0, 100.0, true),
        // R = 2540, half-angle 0.1 rad, half-length 254; ξ axial, η circumferential from the crown
        "shallow_shell" => cylinder_patch(2540.0, FRAC_PI_2, FRAC_PI_2 - 0.1, 0.0, 254.0, false),
        // R = 101.6, L = 304.8; ξ from the straight edge to the crown, η from the clamped end
        "semi_cylinder" => cylinder_patch(101.6, 0.0, FRAC_PI_2, 0.0, 304.8, true),
        // R = 4.953, L = 10.35; η covers x ∈ [0, L/2] from the loaded section to the free end
        "pullout_cylinder" => cylinder_patch(4.953, 0.0, FRAC_PI_2, 0.0, 0.5 * 10.35, true),
        _ => return Err(unknown(name)),
    })
}

fn unknown(name: &str) -> ShellError {
    ShellError::UnknownStrategy { kind: "preset", name: name.into(), available: NAMES.join(", ") }
}

fn refinement(n: usize, degree: usize, continuity: usize) -> Option<Refinement> {
    Some(Refinement { elements_u: n, elements_v: n, degree: Some(degree), continuity })
}

fn monitor(name: &str, at: [f64; 2], component: Axis) -> Monitor {
    Monitor { name: name.into(), at, component }
}

fn points(list: &[(&str, [f64; 2])]) -> BTreeMap<String, [f64; 2]> {
    list.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn arc_length(variant: &str, initial_lpf_step: f64, desired_iterations: usize) -> ContinuationSettings {
    ContinuationSettings {
        method: Method::ArcLength,
        variant: variant.into(),
        initial_lpf_step,
        desired_iterations,
        max_increments: 400,
        tolerances: Tolerances { force: 1e-6, displacement: 1e-6, require_both: true },
        ..ContinuationSettings::default()
    }
}

/// Named benchmark model. `thickness` selects a variant (the load follows the variant table);
/// `None` gives the base thickness.
pub fn preset(name: &str, thickness: Option<f64>) -> Result<ModelFile> {
    let bad_variant = |h: f64, allowed: &[f64]| {
        ShellError::Input(format!("preset {name}: no variant with thickness {h} (available: {allowed:?})"))
    };
    let file = match name {
        "pinched_cylinder_linear" => {
            // E = 3e6, ν = 0.3, h = 3, P = 1; any thickness is accepted (Kh = h/300)
            let h = thickness.unwrap_or(3.0);
            ModelFile {
                geometry: Geometry::Preset(name.into()),
                thickness: h,
                material: Material { e: 3.0e6, nu: 0.3 },
                refinement: refinement(36, 3, 1),
                gauss: GaussChoice::Degree,
                constraints: cylinder_eighth(true),
                loads: vec![Load::Point { at: [1.0, 0.0], force: [0.0, 0.0, -0.25] }],
                constitutive: "Da".into(),
                integrator: "switched".into(),
                geometric: Default::default(),
                solver: ContinuationSettings { method: Method::Linear, ..ContinuationSettings::default() },
                monitors: vec![monitor("w_A", [1.0, 0.0], Axis::Z)],
                points: points(&[("A", [1.0, 0.0]), ("B", [0.0, 0.0])]),
                outputs: vec![],
            }
        }
        "pinched_cylinder_nl" => {
            // E = 3e4, ν = 0.3, h = 1, P_max = 12000 (benchmark-suite values)
            let h = thickness.unwrap_or(1.0);
            if h != 1.0 {
                return Err(bad_variant(h, &[1.0]));
            }
            ModelFile {
                geometry: Geometry::Preset(name.into()),
                thickness: h,
                material: Material { e: 3.0e4, nu: 0.3 },
                refinement: refinement(50, 2, 1),
                gauss: GaussChoice::Degree,
                constraints: cylinder_eighth(true),
                loads: vec![Load::Point { at: [1.0, 0.0], force: [0.0, 0.0, -3000.0] }],
                constitutive: "Da".into(),
                integrator: "switched".into(),
                geometric: Default::default(),
                solver: arc_length("modified_riks", 0.01, 4),
                monitors: vec![monitor("w_A", [1.0, 0.0], Axis::Z), monitor("v_B", [0.0, 0.0], Axis::Y)],
                // C: a strongly bent point on the crown line between load and diaphragm (flagged)
                points: points(&[("A", [1.0, 0.0]), ("B", [0.0, 0.0]), ("C", [1.0, 0.25])]),
                outputs: vec![
                    Output::Curviness { grid: 5, threshold: 0.25 },
                    Output::ReferenceStrains { point: "C".into() },
                ],
            }
        }
        "shallow_shell" => {
            // E = 3102.75, ν = 0.3; (h, P_max) = (12.7, 3000) or (6.35, 750)
            let h = thickness.unwrap_or(12.7);
            let p_max = match h {
                12.7 => 3000.0,
                6.35 => 750.0,
                h => return Err(bad_variant(h, &[12.7, 6.35])),
            };
            ModelFile {
                geometry: Geometry::Preset(name.into()),
                thickness: h,
                material: Material { e: 3102.75, nu: 0.3 },
                refinement: refinement(4, 4, 3),
                gauss: GaussChoice::Degree,
                constraints: vec![
                    Constraint::Symmetry { edge: Edge::XiMin, normal: Axis::X },
                    Constraint::Symmetry { edge: Edge::EtaMin, normal: Axis::Y },
                    Constraint::Hinged { edge: Edge::EtaMax },
                ],
                loads: vec![Load::Point { at: [0.0, 0.0], force: [0.0, 0.0, -0.25 * p_max] }],
                constitutive: "Da".into(),
                integrator: "switched".into(),
                geometric: Default::default(),
                solver: arc_length("linearized", 0.1, 4),
                monitors: vec![monitor("w_A", [0.0, 0.0], Axis::Z), monitor("w_B", [1.0, 0.0], Axis::Z)],
                points: points(&[("A", [0.0, 0.0]), ("B", [1.0, 0.0])]),
                outputs: vec![],
            }
        }
        "semi_cylinder" => {
            // E = 2068.5, ν = 0.3; (h, P) = (3, 2000), (6, 14000), (12, 48000), (24, 190000)
            let h = thickness.unwrap_or(3.0);
            let table = [(3.0, 2000.0), (6.0, 14000.0), (12.0, 48000.0), (24.0, 190000.0)];
            let p = table
                .iter()
                .find(|(t, _)| *t == h)
                .map(|(_, p)| *p)
                .ok_or_else(|| bad_variant(h, &table.map(|(t, _)| t)))?;
            ModelFile {
                geometry: Geometry::Preset(name.into()),
                thickness: h,
                material: Material { e: 2068.5, nu: 0.3 },
                refinement: refinement(20, 2, 1),
                gauss: GaussChoice::Degree,
                constraints: vec![
                    Constraint::Clamped { edge: Edge::EtaMin },
                    // straight edge: no vertical motion, no rotation about the axis
                    Constraint::Fixed { edge: Edge::XiMin, components: vec![Axis::Z], rows: 1 },
                    Constraint::Tie { edge: Edge::XiMin, components: vec![Axis::Y] },
                    Constraint::Symmetry { edge: Edge::XiMax, normal: Axis::Y },
                ],
                loads: vec![Load::Point { at: [1.0, 1.0], force: [0.0, 0.0, -0.5 * p] }],
                constitutive: "Da".into(),
                integrator: "switched".into(),
                geometric: Default::default(),
                solver: arc_length("linearized", 0.05, 4),
                monitors: vec![monitor("w_A", [1.0, 1.0], Axis::Z)],
                points: points(&[("A", [1.0, 1.0])]),
                outputs: vec![Output::Curviness { grid: 5, threshold: 0.25 }],
            }
        }
        "pullout_cylinder" => {
            // E = 10.5e6, ν = 0.3125, h = 0.094, P = 40000
            let h = thickness.unwrap_or(0.094);
            if h != 0.094 {
                return Err(bad_variant(h, &[0.094]));
            }
            ModelFile {
                geometry: Geometry::Preset(name.into()),
                thickness: h,
                material: Material { e: 10.5e6, nu: 0.3125 },
                refinement: refinement(60, 3, 2),
                gauss: GaussChoice::Degree,
                constraints: cylinder_eighth(false),
                loads: vec![Load::Point { at: [1.0, 0.0], force: [0.0, 0.0, 10000.0] }],
                constitutive: "Da".into(),
                integrator: "switched".into(),
                geometric: Default::default(),
                solver: arc_length("linearized", 0.02, 4),
                monitors: vec![
                    monitor("w_A", [1.0, 0.0], Axis::Z),
                    monitor("w_B", [1.0, 1.0], Axis::Z),
                    monitor("v_C", [0.0, 1.0], Axis::Y),
                ],
                // B: free end on the loaded generator; C: free end at the side; D: mid-way along
                // the loaded generator (location flagged)
                points: points(&[("A", [1.0, 0.0]), ("B", [1.0, 1.0]), ("C", [0.0, 1.0]), ("D", [1.0, 0.5])]),
                outputs: vec![
                    Output::Curviness { grid: 5, threshold: 0.25 },
                    Output::ReferenceStrains { point: "D".into() },
                    Output::OuterFiber { point: "D".into(), fiber: 0.5, modes: BOTH_MODES.to_vec() },
                    Output::OuterFiber { point: "B".into(), fiber: 0.5, modes: BOTH_MODES.to_vec() },
                ],
            }
        }
        _ => return Err(unknown(name)),
    };
    let expected = file.thickness / radius(name);
    self_check(&file, expected)?;
    Ok(file)
}

fn radius(name: &str) -> f64 {
    match name {
        "shallow_shell" => 2540.0,
        "semi_cylinder" => 101.6,
        "pullout_cylinder" => 4.953,
        "pinched_cylinder_nl" => 100.0,
        _ => 300.0,
    }
}

/// Eighth of a closed cylinder with the arc in ξ from the z = 0 plane (ξ = 0) to the y = 0 plane
/// (ξ = 1): symmetry on both, symmetry on the x = 0 section (η = 0) and optionally a diaphragm at η = 1.
fn cylinder_eighth(diaphragm: bool) -> Vec<Constraint> {
    let mut c = vec![
        Constraint::Symmetry { edge: Edge::XiMin, normal: Axis::Z },
        Constraint::Symmetry { edge: Edge::XiMax, normal: Axis::Y },
        Constraint::Symmetry { edge: Edge::EtaMin, normal: Axis::X },
    ];
    if diaphragm {
        c.push(Constraint::Diaphragm { edge: Edge::EtaMax, normal: Axis::X });
    }
    c
}

/// Initial curviness at the patch centre must equal h/R.
fn self_check(file: &ModelFile, expected: f64) -> Result<()> {
    let s: NurbsSurface = file.geometry.surface()?;
    let d = s.surface_point(0.5, 0.5)?;
    let kh = compute_metric(&d.d1, &d.d2)?.curviness(file.thickness);
    if (kh - expected).abs() > 1e-10 * expected.max(1.0) {
        return Err(ShellError::InvalidSurface(format!("preset curviness {kh} differs from expected {expected}")));
    }
    Ok(())
}
