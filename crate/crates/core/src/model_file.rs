//! JSON model description: geometry, refinement, boundary conditions, loads, solver and outputs.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constitutive::{model_registry, ConstitutiveModel, Material};
use crate::continuation::ContinuationSettings;
use crate::error::{Result, ShellError};
use crate::kinematics::DistributionMode;
use crate::mesh::GaussChoice;
use crate::model::{Constraint, GeometricVariant, Load, Model, ModelOptions, Monitor};
use crate::nurbs::{NurbsSurface, SurfaceJson};
use crate::presets;
use crate::thickness::integrator_registry;

/// Either an explicit surface or the base geometry of a named preset.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Geometry {
    Preset(String),
    Surface(SurfaceJson),
}

impl<'de> Deserialize<'de> for Geometry {
    // Hand-written so that errors inside the surface object name the offending key.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(Geometry::Preset(s)),
            v @ serde_json::Value::Object(_) => {
                SurfaceJson::deserialize(v).map(Geometry::Surface).map_err(|e| D::Error::custom(format!("geometry: {e}")))
            }
            other => Err(D::Error::custom(format!("geometry: expected preset name or surface object, got {other}"))),
        }
    }
}

impl Geometry {
    pub fn surface(&self) -> Result<NurbsSurface> {
        match self {
            Geometry::Preset(name) => NurbsSurface::from_json(&presets::base_surface(name)?),
            Geometry::Surface(s) => NurbsSurface::from_json(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refinement {
    pub elements_u: usize,
    pub elements_v: usize,
    #[serde(default)]
    pub degree: Option<usize>,
    pub continuity: usize,
}

fn default_grid() -> usize {
    5
}

fn default_threshold() -> f64 {
    0.25
}

fn default_fiber() -> f64 {
    0.5
}

fn default_modes() -> Vec<DistributionMode> {
    vec![DistributionMode::Exact, DistributionMode::Linear]
}

/// Requested artifacts besides the equilibrium-path CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Output {
    /// Curviness field of the final configuration (NDJSON).
    Curviness {
        #[serde(default = "default_grid")]
        grid: usize,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    /// Reference strains and curvature changes of the final configuration (NDJSON).
    Fields {
        #[serde(default = "default_grid")]
        grid: usize,
    },
    /// History of reference strains at a named point (CSV).
    ReferenceStrains { point: String },
    /// History of outer-fiber strains and stresses at a named point (CSV per mode).
    /// `fiber` is ζ/h; +0.5 is the face on the side of the surface normal.
    OuterFiber {
        point: String,
        #[serde(default = "default_fiber")]
        fiber: f64,
        #[serde(default = "default_modes")]
        modes: Vec<DistributionMode>,
    },
}

fn default_constitutive() -> String {
    "Da".into()
}

fn default_integrator() -> String {
    "switched".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub geometry: Geometry,
    pub thickness: f64,
    pub material: Material,
    #[serde(default)]
    pub refinement: Option<Refinement>,
    #[serde(default)]
    pub gauss: GaussChoice,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default = "default_constitutive")]
    pub constitutive: String,
    #[serde(default = "default_integrator")]
    pub integrator: String,
    #[serde(default)]
    pub geometric: GeometricVariant,
    #[serde(default)]
    pub solver: ContinuationSettings,
    #[serde(default)]
    pub monitors: Vec<Monitor>,
    /// Named parametric points (A, B, ...) referenced by outputs.
    #[serde(default)]
    pub points: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub outputs: Vec<Output>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| ShellError::Input(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        for o in &self.outputs {
            match o {
                Output::ReferenceStrains { point } | Output::OuterFiber { point, .. } => {
                    self.point(point)?;
                }
                Output::Curviness { grid, .. } | Output::Fields { grid } if *grid < 2 => {
                    return Err(ShellError::Input(format!("output grid must be at least 2, got {grid}")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn point(&self, name: &str) -> Result<[f64; 2]> {
        self.points.get(name).copied().ok_or_else(|| {
            ShellError::Input(format!(
                "unknown point '{name}' (defined: {})",
                self.points.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    /// Analysis surface after refinement.
    pub fn surface(&self) -> Result<NurbsSurface> {
        let base = self.geometry.surface()?;
        match self.refinement {
            Some(r) => base.refine(r.elements_u, r.elements_v, r.degree, r.continuity),
            None => Ok(base),
        }
    }

    pub fn constitutive_model(&self) -> Result<Arc<dyn ConstitutiveModel>> {
        let integrator = integrator_registry().get(&self.integrator)?;
        model_registry(integrator).get(&self.constitutive)
    }

    pub fn build(&self) -> Result<Model> {
        self.validate()?;
        Model::new(
            self.surface()?,
            self.thickness,
            self.material,
            self.constraints.clone(),
            self.loads.clone(),
            self.monitors.clone(),
            self.constitutive_model()?,
            ModelOptions { gauss: self.gauss, geometric: self.geometric },
        )
    }
}
