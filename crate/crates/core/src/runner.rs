//! Batch execution of a model file: equilibrium path, requested post-processing and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::analysis::ShellSystem;
use crate::continuation::{trace, Method, Outcome, PathPoint};
use crate::error::Result;
use crate::kinematics::DistributionMode;
use crate::model_file::{ModelFile, Output};
use crate::postprocess::{
    curviness_field, strain_field, write_ndjson, FiberRecord, FieldSample, OuterFiberTracker, ReferenceStrainTracker,
    StrainRecord,
};

pub const CONSTITUTIVE_TAGS: [&str; 4] = ["Da", "D0", "D1", "D2"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub constitutive: String,
    pub method: Method,
    pub variant: String,
    pub thickness: f64,
    pub equations: usize,
    pub outcome: Outcome,
    pub increments: usize,
    pub total_iterations: usize,
    /// Wall time of the path computation (model setup excluded).
    pub seconds: f64,
    pub monitors: Vec<String>,
    pub path: Vec<PathPoint>,
    /// Post-processing problems that did not stop the analysis.
    pub warnings: Vec<String>,
    pub environment: Environment,
}

impl RunReport {
    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }
}

pub struct FiberHistory {
    pub point: String,
    pub mode: DistributionMode,
    pub records: Vec<FiberRecord>,
}

pub struct RunArtifacts {
    pub report: RunReport,
    pub final_q: Vec<f64>,
    pub final_lpf: f64,
    pub curviness: Option<Vec<FieldSample>>,
    pub fields: Option<Vec<FieldSample>>,
    pub strains: Vec<(String, Vec<StrainRecord>)>,
    pub fibers: Vec<FiberHistory>,
}

/// Runs the analysis. Input problems are errors; solver failures are reported in the outcome
/// with the partial path.
pub fn run(file: &ModelFile) -> Result<RunArtifacts> {
    let model = file.build()?;
    let mut strains = Vec::new();
    let mut fibers = Vec::new();
    for o in &file.outputs {
        match o {
            Output::ReferenceStrains { point } => {
                strains.push((point.clone(), ReferenceStrainTracker::new(&model, file.point(point)?)?));
            }
            Output::OuterFiber { point, fiber, modes } => {
                for &mode in modes {
                    fibers.push((point.clone(), OuterFiberTracker::new(&model, file.point(point)?, *fiber, mode)?));
                }
            }
            _ => {}
        }
    }
    let mut warnings = Vec::new();
    let start = model.initial_configuration()?;
    let mut sys = ShellSystem::new(&model)?;
    let clock = Instant::now();
    let result = trace(&mut sys, start.clone(), &file.solver, |state, _| {
        for (name, t) in strains.iter_mut() {
            if let Err(e) = t.observe(&model, &state.q, state.lpf) {
                warnings.push(format!("reference strains at {name}: {e}"));
            }
        }
        for (name, t) in fibers.iter_mut() {
            if let Err(e) = t.observe(&model, &state.q, state.lpf) {
                warnings.push(format!("fiber at {name}: {e}"));
            }
        }
    });
    let seconds = clock.elapsed().as_secs_f64();
    let (path, outcome, final_state, total_iterations) = match result {
        Ok(r) => (r.points, r.outcome, r.final_state, r.total_iterations),
        Err(e) => (Vec::new(), Outcome::Failed(e.to_string()), start, 0),
    };
    let mut curviness = None;
    let mut fields = None;
    for o in &file.outputs {
        match o {
            Output::Curviness { grid, threshold } => {
                curviness = Some(curviness_field(&model, &final_state.q, final_state.lpf, *grid, *threshold)?);
            }
            Output::Fields { grid } => fields = Some(strain_field(&model, &final_state.q, final_state.lpf, *grid)?),
            _ => {}
        }
    }
    let report = RunReport {
        constitutive: file.constitutive.clone(),
        method: file.solver.method,
        variant: file.solver.variant.clone(),
        thickness: file.thickness,
        equations: model.dofs.num_equations(),
        outcome,
        increments: path.len(),
        total_iterations,
        seconds,
        monitors: file.monitors.iter().map(|m| m.name.clone()).collect(),
        path,
        warnings,
        environment: Environment::current(),
    };
    Ok(RunArtifacts {
        report,
        final_lpf: final_state.lpf,
        final_q: final_state.q,
        curviness,
        fields,
        strains: strains.into_iter().map(|(n, t)| (n, t.history)).collect(),
        fibers: fibers.into_iter().map(|(point, t)| FiberHistory { point, mode: t.mode, records: t.history }).collect(),
    })
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn path_csv(report: &RunReport) -> String {
    let mut s = String::from("increment,lpf");
    for m in &report.monitors {
        s.push(',');
        s.push_str(m);
    }
    s.push_str(",iterations,arc_length,inertia,seconds\n");
    for p in &report.path {
        let _ = write!(s, "{},{}", p.increment, num(p.lpf));
        for v in &p.monitors {
            let _ = write!(s, ",{}", num(*v));
        }
        let _ = writeln!(s, ",{},{},{},{}", p.iterations, num(p.arc_length), p.inertia, num(p.seconds));
    }
    s
}

fn strain_csv(records: &[StrainRecord]) -> String {
    let mut s = String::from("lpf,Kh");
    for group in ["eps", "eps_cov", "kappa", "kappa_diff", "kappa_cov"] {
        for c in ["11", "22", "12"] {
            let _ = write!(s, ",{group}{c}");
        }
    }
    s.push('\n');
    for r in records {
        let _ = write!(s, "{},{}", num(r.lpf), num(r.kh));
        for g in [&r.membrane, &r.membrane_covariant, &r.bending, &r.bending_difference, &r.bending_covariant] {
            for v in g {
                let _ = write!(s, ",{}", num(*v));
            }
        }
        s.push('\n');
    }
    s
}

fn fiber_csv(records: &[FiberRecord]) -> String {
    let mut s = String::from("lpf,eps11,eps22,eps12,sigma11,sigma22,sigma12\n");
    for r in records {
        let _ = write!(s, "{}", num(r.lpf));
        for v in r.strain.iter().chain(&r.stress) {
            let _ = write!(s, ",{}", num(*v));
        }
        s.push('\n');
    }
    s
}

fn ndjson(samples: &[FieldSample]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_ndjson(samples, &mut buf)?;
    Ok(buf)
}

/// Writes path.csv, report.json and the requested field/history files into `dir`.
pub fn write_artifacts(a: &RunArtifacts, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("path.csv"), path_csv(&a.report))?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&a.report)?)?;
    if let Some(c) = &a.curviness {
        fs::write(dir.join("curviness.ndjson"), ndjson(c)?)?;
    }
    if let Some(f) = &a.fields {
        fs::write(dir.join("fields.ndjson"), ndjson(f)?)?;
    }
    for (p, r) in &a.strains {
        fs::write(dir.join(format!("strains_{p}.csv")), strain_csv(r))?;
    }
    for f in &a.fibers {
        let mode = match f.mode {
            DistributionMode::Exact => "exact",
            DistributionMode::Linear => "linear",
        };
        fs::write(dir.join(format!("fiber_{}_{mode}.csv", f.point)), fiber_csv(&f.records))?;
    }
    Ok(())
}

/// Monitor values of `path` at load factor `lpf`, interpolated linearly on the path segment that
/// brackets `lpf` and lies closest (in increment count) to `near`. The path starts at the origin.
pub fn interpolate_at(path: &[PathPoint], lpf: f64, near: usize) -> Option<Vec<f64>> {
    let n_mon = path.first()?.monitors.len();
    let mut pts: Vec<(f64, &[f64])> = Vec::with_capacity(path.len() + 1);
    let zero = vec![0.0; n_mon];
    pts.push((0.0, &zero));
    pts.extend(path.iter().map(|p| (p.lpf, p.monitors.as_slice())));
    let mut best: Option<(usize, Vec<f64>)> = None;
    for (i, w) in pts.windows(2).enumerate() {
        let (l0, l1) = (w[0].0, w[1].0);
        if (lpf - l0) * (lpf - l1) > 0.0 {
            continue;
        }
        let t = if l1 == l0 { 1.0 } else { (lpf - l0) / (l1 - l0) };
        let v = w[0].1.iter().zip(w[1].1).map(|(a, b)| a + t * (b - a)).collect();
        let dist = (i + 1).abs_diff(near);
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, v));
        }
    }
    best.map(|(_, v)| v)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub constitutive: String,
    pub outcome: Outcome,
    pub increments: usize,
    pub total_iterations: usize,
    pub seconds: f64,
    pub final_lpf: Option<f64>,
    pub final_monitors: Vec<f64>,
    /// (final monitor − Dᵃ final monitor)/|Dᵃ final monitor|.
    pub relative_to_da: Vec<f64>,
    pub time_ratio_to_d0: Option<f64>,
    pub time_ratio_to_da: Option<f64>,
    pub error: Option<String>,
}

pub struct Comparison {
    pub summaries: Vec<ModelSummary>,
    /// Per Dᵃ path point: LPF and, per other model and monitor, the relative difference.
    pub csv: String,
    pub runs: Vec<(String, Option<RunArtifacts>)>,
}

/// Runs all four constitutive models with identical settings. A failing model is recorded and the
/// others continue.
pub fn compare(file: &ModelFile) -> Result<Comparison> {
    file.validate()?;
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for tag in CONSTITUTIVE_TAGS {
        let f = ModelFile { constitutive: tag.into(), ..file.clone() };
        match run(&f) {
            Ok(a) => {
                runs.push((tag.to_string(), Some(a)));
                errors.push(None);
            }
            Err(e) => {
                runs.push((tag.to_string(), None));
                errors.push(Some(e.to_string()));
            }
        }
    }
    let time = |tag: &str| {
        runs.iter().find(|(t, _)| t == tag).and_then(|(_, a)| a.as_ref()).map(|a| a.report.seconds)
    };
    let (t_d0, t_da) = (time("D0"), time("Da"));
    let da = runs[0].1.as_ref();
    let final_of = |a: &RunArtifacts| a.report.path.last().map(|p| (p.lpf, p.monitors.clone()));
    let da_final = da.and_then(final_of);
    let rel = |v: f64, r: f64| if r != 0.0 { (v - r) / r.abs() } else { f64::NAN };
    let mut summaries = Vec::new();
    for ((tag, a), err) in runs.iter().zip(errors) {
        let fin = a.as_ref().and_then(final_of);
        let relative_to_da = match (&fin, &da_final) {
            (Some((_, v)), Some((_, r))) => v.iter().zip(r).map(|(a, b)| rel(*a, *b)).collect(),
            _ => Vec::new(),
        };
        let secs = a.as_ref().map(|a| a.report.seconds);
        summaries.push(ModelSummary {
            constitutive: tag.clone(),
            outcome: a.as_ref().map_or(Outcome::Failed("not run".into()), |a| a.report.outcome.clone()),
            increments: a.as_ref().map_or(0, |a| a.report.increments),
            total_iterations: a.as_ref().map_or(0, |a| a.report.total_iterations),
            seconds: secs.unwrap_or(f64::NAN),
            final_lpf: fin.as_ref().map(|f| f.0),
            final_monitors: fin.map(|f| f.1).unwrap_or_default(),
            relative_to_da,
            time_ratio_to_d0: secs.zip(t_d0).map(|(a, b)| a / b),
            time_ratio_to_da: secs.zip(t_da).map(|(a, b)| a / b),
            error: err,
        });
    }
    let mut csv = String::from("lpf");
    for (tag, _) in runs.iter().skip(1) {
        for m in &file.monitors {
            let _ = write!(csv, ",{}_{}_rel", m.name, tag);
        }
    }
    csv.push('\n');
    if let Some(da) = da {
        for p in &da.report.path {
            csv.push_str(&num(p.lpf));
            for (_, other) in runs.iter().skip(1) {
                let vals = other.as_ref().and_then(|o| interpolate_at(&o.report.path, p.lpf, p.increment));
                for (k, r) in p.monitors.iter().enumerate() {
                    let d = vals.as_ref().map_or(f64::NAN, |v| rel(v[k], *r));
                    let _ = write!(csv, ",{}", num(d));
                }
            }
            csv.push('\n');
        }
    }
    Ok(Comparison { summaries, csv, runs })
}

pub fn write_comparison(c: &Comparison, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("comparison.csv"), &c.csv)?;
    fs::write(dir.join("comparison.json"), serde_json::to_string_pretty(&c.summaries)?)?;
    for (tag, a) in &c.runs {
        if let Some(a) = a {
            write_artifacts(a, &dir.join(tag))?;
        }
    }
    Ok(())
}
