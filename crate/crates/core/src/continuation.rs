//! Path following: arc-length continuation, load-controlled Newton-Raphson and linear analysis.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShellError};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    ArcLength,
    Newton,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// ‖λ Q_f − F‖ ≤ force · ‖λ Q_f‖.
    pub force: f64,
    /// ‖δq‖ ≤ displacement · ‖Δq‖.
    pub displacement: f64,
    /// Both criteria (default) or either one.
    pub require_both: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { force: 1e-6, displacement: 1e-8, require_both: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSettings {
    pub method: Method,
    /// Arc-length constraint variant (registry name).
    pub variant: String,
    /// First-increment arc length; when absent it is calibrated so that Δλ⁰ = `initial_lpf_step`.
    pub initial_arc_length: Option<f64>,
    pub initial_lpf_step: f64,
    pub desired_iterations: usize,
    pub max_increments: usize,
    pub max_iterations: usize,
    pub tolerances: Tolerances,
    /// Load term weight ψ in the constraint.
    pub psi: f64,
    /// Scale displacements by the largest component of the linear solution.
    pub scale_displacements: bool,
    /// Arc-length bounds relative to the first arc length.
    pub min_arc_length_factor: f64,
    pub max_arc_length_factor: f64,
    pub target_lpf: f64,
    /// Load increments for Newton-Raphson.
    pub increments: usize,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        ContinuationSettings {
            method: Method::ArcLength,
            variant: "linearized".into(),
            initial_arc_length: None,
            initial_lpf_step: 0.05,
            desired_iterations: 4,
            max_increments: 200,
            max_iterations: 25,
            tolerances: Tolerances::default(),
            psi: 1.0,
            scale_displacements: true,
            min_arc_length_factor: 1e-6,
            max_arc_length_factor: 10.0,
            target_lpf: 1.0,
            increments: 10,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        if !(t.force > 0.0 && t.displacement > 0.0) {
            return Err(ShellError::Input("tolerances must be positive".into()));
        }
        if self.desired_iterations == 0 || self.max_iterations == 0 || self.increments == 0 {
            return Err(ShellError::Input("iteration and increment counts must be at least 1".into()));
        }
        if !(self.initial_lpf_step > 0.0) || self.initial_arc_length.is_some_and(|l| !(l > 0.0)) {
            return Err(ShellError::Input("initial step must be positive".into()));
        }
        if !(self.psi >= 0.0) || !(self.target_lpf > 0.0) {
            return Err(ShellError::Input("psi must be non-negative and target_lpf positive".into()));
        }
        if !(self.min_arc_length_factor > 0.0 && self.max_arc_length_factor >= 1.0) {
            return Err(ShellError::Input("invalid arc-length bounds".into()));
        }
        Ok(())
    }
}

/// A discretized equilibrium problem F(u) = λ Q on reduced equations, with converged states of
/// type `State` and trial points u = u_base + du.
pub trait EquilibriumSystem {
    type State;
    fn num_equations(&self) -> usize;
    fn reference_load(&self) -> Vec<f64>;
    /// Internal force at base + du; with `tangent`, also assembles and factors K_T there and
    /// returns its inertia (number of negative pivots).
    fn evaluate(&mut self, base: &Self::State, du: &[f64], tangent: bool) -> Result<(Vec<f64>, Option<usize>)>;
    /// Solve with the most recently factored tangent.
    fn solve(&self, rhs: &[f64]) -> Vec<f64>;
    /// Make base + du (the last evaluated point) a converged state.
    fn accept(&mut self, base: &Self::State, du: &[f64], lpf: f64) -> Result<Self::State>;
    fn lpf(&self, state: &Self::State) -> f64;
    fn monitors(&self, state: &Self::State) -> Vec<f64>;
}

/// Inputs to the iterative load-factor update. All displacement vectors are scaled.
pub struct CorrectorInput<'a> {
    /// Current increment Δq̃_j and Δλ_j.
    pub du: &'a [f64],
    pub dlam: f64,
    /// K_j⁻¹ Ψ_j.
    pub du_residual: &'a [f64],
    /// K_j⁻¹ Q_f.
    pub du_tangent: &'a [f64],
    /// Predictor tangent q̃_T of the increment.
    pub du_tangent0: &'a [f64],
    pub arc_length: f64,
    pub psi: f64,
}

pub trait ArcLengthConstraint: Send + Sync {
    fn name(&self) -> &'static str;
    /// Weight of the load term in the predictor and the Δl calibration.
    fn load_weight(&self, psi: f64) -> f64 {
        psi
    }
    fn correction(&self, c: &CorrectorInput) -> Result<f64>;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Iterative changes orthogonal to the predictor (q̃_T, 1).
pub struct Linearized;

impl ArcLengthConstraint for Linearized {
    fn name(&self) -> &'static str {
        "linearized"
    }

    fn correction(&self, c: &CorrectorInput) -> Result<f64> {
        let den = dot(c.du_tangent, c.du_tangent0) + c.psi * c.psi;
        Ok(-dot(c.du_residual, c.du_tangent0) / den)
    }
}

/// Iterative changes orthogonal to the current increment (updated normal plane).
pub struct ModifiedRiks;

impl ArcLengthConstraint for ModifiedRiks {
    fn name(&self) -> &'static str {
        "modified_riks"
    }

    fn correction(&self, c: &CorrectorInput) -> Result<f64> {
        let den = dot(c.du, c.du_tangent) + c.psi * c.psi * c.dlam;
        Ok(-dot(c.du, c.du_residual) / den)
    }
}

/// ‖Δq̃‖ = Δl exactly at every iteration; the root closer in direction to the current increment.
pub struct Cylindrical;

impl ArcLengthConstraint for Cylindrical {
    fn name(&self) -> &'static str {
        "cylindrical"
    }

    fn load_weight(&self, _psi: f64) -> f64 {
        0.0
    }

    fn correction(&self, c: &CorrectorInput) -> Result<f64> {
        let w: Vec<f64> = c.du.iter().zip(c.du_residual).map(|(a, b)| a + b).collect();
        let a = dot(c.du_tangent, c.du_tangent);
        let b = 2.0 * dot(c.du_tangent, &w);
        let cc = dot(&w, &w) - c.arc_length * c.arc_length;
        let disc = b * b - 4.0 * a * cc;
        if disc < 0.0 || a == 0.0 {
            return Err(ShellError::SolverFailure("cylindrical constraint has no real root".into()));
        }
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        let roots = [q / a, if q != 0.0 { cc / q } else { -b / (2.0 * a) }];
        let score = |l: f64| dot(c.du, &w) + l * dot(c.du, c.du_tangent);
        Ok(if score(roots[0]) >= score(roots[1]) { roots[0] } else { roots[1] })
    }
}

pub fn arc_length_registry() -> Registry<dyn ArcLengthConstraint> {
    let mut r: Registry<dyn ArcLengthConstraint> = Registry::new("arc-length variant");
    r.register("linearized", Arc::new(Linearized));
    r.register("modified_riks", Arc::new(ModifiedRiks));
    r.register("cylindrical", Arc::new(Cylindrical));
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub increment: usize,
    pub lpf: f64,
    pub monitors: Vec<f64>,
    pub iterations: usize,
    pub arc_length: f64,
    pub inertia: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    MaxIncrements,
    Failed(String),
}

pub struct PathResult<S> {
    pub points: Vec<PathPoint>,
    pub outcome: Outcome,
    pub final_state: S,
    pub total_iterations: usize,
}

struct Convergence {
    force: f64,
    displacement: f64,
    both: bool,
}

impl Convergence {
    fn new(t: &Tolerances) -> Self {
        Convergence { force: t.force, displacement: t.displacement, both: t.require_both }
    }

    fn check(&self, residual: f64, load: f64, correction: f64, increment: f64) -> bool {
        let f_ok = residual <= self.force * load.max(f64::MIN_POSITIVE);
        let d_ok = correction <= self.displacement * increment.max(f64::MIN_POSITIVE);
        if self.both {
            f_ok && d_ok
        } else {
            f_ok || d_ok
        }
    }
}

fn residual(lpf: f64, q: &[f64], f: &[f64]) -> Vec<f64> {
    q.iter().zip(f).map(|(a, b)| lpf * a - b).collect()
}

/// Iterate at fixed load factor from `base` with initial increment `du`; returns the converged
/// increment, iteration count and inertia at the converged point.
fn newton_at<S: EquilibriumSystem>(
    sys: &mut S,
    base: &S::State,
    mut du: Vec<f64>,
    lpf: f64,
    qf: &[f64],
    conv: &Convergence,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize, usize)> {
    let mut last_corr = f64::INFINITY;
    for it in 0..=max_iterations {
        let (f, inertia) = sys.evaluate(base, &du, true)?;
        let r = residual(lpf, qf, &f);
        // a vanishing residual needs no correction to be trusted
        let rn = norm(&r);
        if conv.check(rn, lpf.abs() * norm(qf), last_corr, norm(&du)) || rn == 0.0 {
            return Ok((du, it, inertia.unwrap_or(0)));
        }
        if it == max_iterations {
            break;
        }
        let d = sys.solve(&r);
        last_corr = norm(&d);
        if !last_corr.is_finite() {
            break;
        }
        du.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
    }
    Err(ShellError::SolverFailure(format!("no convergence in {max_iterations} iterations at LPF {lpf:.6e}")))
}

/// Arc-length path from `start` toward `settings.target_lpf`. `observe` sees every converged state.
pub fn arc_length<S: EquilibriumSystem>(
    sys: &mut S,
    start: S::State,
    settings: &ContinuationSettings,
    variant: &dyn ArcLengthConstraint,
    mut observe: impl FnMut(&S::State, &PathPoint),
) -> Result<PathResult<S::State>> {
    settings.validate()?;
    let clock = Instant::now();
    let conv = Convergence::new(&settings.tolerances);
    let qf = sys.reference_load();
    if norm(&qf) == 0.0 {
        return Err(ShellError::InvalidLoad("reference load vector is zero".into()));
    }
    let n = sys.num_equations();
    let zero = vec![0.0; n];
    let (_, inertia0) = sys.evaluate(&start, &zero, true)?;
    let mut qt = sys.solve(&qf);
    let scale = if settings.scale_displacements {
        qt.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
    } else {
        1.0
    };
    let sc = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x / scale).collect() };
    let psi = variant.load_weight(settings.psi);
    let qt_s = sc(&qt);
    let dl0 = settings
        .initial_arc_length
        .unwrap_or_else(|| settings.initial_lpf_step * (dot(&qt_s, &qt_s) + psi * psi).sqrt());
    let (dl_min, dl_max) = (dl0 * settings.min_arc_length_factor, dl0 * settings.max_arc_length_factor);

    let mut state = start;
    let _ = inertia0;
    let mut points = Vec::new();
    let mut dl = dl0;
    let mut prev: Option<(Vec<f64>, f64)> = None;
    let mut total_iterations = 0;
    let mut outcome = Outcome::MaxIncrements;

    'increments: for inc in 1..=settings.max_increments {
        let lam_b = sys.lpf(&state);
        let accepted = loop {
            let qt_s = sc(&qt);
            let mut dlam = dl / (dot(&qt_s, &qt_s) + psi * psi).sqrt();
            if let Some((du_p, dlam_p)) = &prev {
                if dot(&qt_s, &sc(du_p)) + psi * psi * dlam_p < 0.0 {
                    dlam = -dlam;
                }
            }
            match correct(sys, &state, settings, variant, &conv, &qf, &qt, scale, dl, lam_b, dlam, psi) {
                Ok(ok) => break Some(ok),
                Err(_) if dl * 0.5 >= dl_min => {
                    dl *= 0.5;
                    // the failed corrector left another tangent factored; restore the base one
                    sys.evaluate(&state, &zero, true)?;
                    qt = sys.solve(&qf);
                }
                Err(e) => {
                    outcome = Outcome::Failed(format!("arc length below minimum: {e}"));
                    break None;
                }
            }
        };
        let Some((du, dlam, iters, inert)) = accepted else { break 'increments };
        total_iterations += iters;
        let lam = lam_b + dlam;
        let target = settings.target_lpf;
        let overshoot = lam > target * (1.0 + 1e-12) && lam_b < target;
        let (du, lam, iters, inert) = if overshoot {
            // finish exactly at the target with load control from the last converged state
            sys.evaluate(&state, &zero, true)?;
            let guess: Vec<f64> = sys.solve(&qf).iter().map(|v| v * (target - lam_b)).collect();
            match newton_at(sys, &state, guess, target, &qf, &conv, settings.max_iterations) {
                Ok((d, it, ine)) => (d, target, iters + it, ine),
                Err(_) => {
                    sys.evaluate(&state, &du, true)?;
                    (du, lam, iters, inert)
                }
            }
        } else {
            (du, lam, iters, inert)
        };
        let new_state = sys.accept(&state, &du, lam)?;
        let inertia = inert;
        let point = PathPoint {
            increment: inc,
            lpf: lam,
            monitors: sys.monitors(&new_state),
            iterations: iters,
            arc_length: dl,
            inertia,
            seconds: clock.elapsed().as_secs_f64(),
        };
        observe(&new_state, &point);
        points.push(point);
        prev = Some((du, lam - lam_b));
        state = new_state;
        if lam >= target * (1.0 - 1e-12) {
            outcome = Outcome::Completed;
            break;
        }
        // the tangent at the accepted point is the last factorization
        qt = sys.solve(&qf);
        dl = (dl * (settings.desired_iterations as f64 / iters.max(1) as f64).sqrt()).clamp(dl_min, dl_max);
    }
    Ok(PathResult { points, outcome, final_state: state, total_iterations })
}

#[allow(clippy::too_many_arguments)]
fn correct<S: EquilibriumSystem>(
    sys: &mut S,
    base: &S::State,
    settings: &ContinuationSettings,
    variant: &dyn ArcLengthConstraint,
    conv: &Convergence,
    qf: &[f64],
    qt0: &[f64],
    scale: f64,
    dl: f64,
    lam_b: f64,
    dlam0: f64,
    psi: f64,
) -> Result<(Vec<f64>, f64, usize, usize)> {
    let sc = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x / scale).collect() };
    let qt0_s = sc(qt0);
    let mut du: Vec<f64> = qt0.iter().map(|v| v * dlam0).collect();
    let mut dlam = dlam0;
    let mut last_corr = f64::INFINITY;
    let qn = norm(qf);
    for it in 0..=settings.max_iterations {
        let (f, inertia) = sys.evaluate(base, &du, true)?;
        let lam = lam_b + dlam;
        let r = residual(lam, qf, &f);
        let rn = norm(&r);
        if conv.check(rn, lam.abs() * qn, last_corr, norm(&du)) || rn == 0.0 {
            return Ok((du, dlam, it, inertia.unwrap_or(0)));
        }
        if it == settings.max_iterations {
            break;
        }
        let dr = sys.solve(&r);
        let dt = sys.solve(qf);
        let (du_s, dr_s, dt_s) = (sc(&du), sc(&dr), sc(&dt));
        let dl_iter = variant.correction(&CorrectorInput {
            du: &du_s,
            dlam,
            du_residual: &dr_s,
            du_tangent: &dt_s,
            du_tangent0: &qt0_s,
            arc_length: dl,
            psi,
        })?;
        if !dl_iter.is_finite() {
            break;
        }
        let d: Vec<f64> = dr.iter().zip(&dt).map(|(a, b)| a + dl_iter * b).collect();
        last_corr = norm(&d);
        du.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
        dlam += dl_iter;
    }
    Err(ShellError::SolverFailure("arc-length corrector did not converge".into()))
}

/// Load-controlled Newton-Raphson in `settings.increments` equal steps to the target, halving a
/// step that fails.
pub fn newton_raphson<S: EquilibriumSystem>(
    sys: &mut S,
    start: S::State,
    settings: &ContinuationSettings,
    mut observe: impl FnMut(&S::State, &PathPoint),
) -> Result<PathResult<S::State>> {
    settings.validate()?;
    let clock = Instant::now();
    let conv = Convergence::new(&settings.tolerances);
    let qf = sys.reference_load();
    let n = sys.num_equations();
    let mut state = start;
    let mut points = Vec::new();
    let mut total = 0;
    let step0 = (settings.target_lpf - sys.lpf(&state)) / settings.increments as f64;
    let mut step = step0;
    let mut inc = 0;
    let mut outcome = Outcome::Completed;
    while sys.lpf(&state) < settings.target_lpf * (1.0 - 1e-12) {
        if inc >= settings.max_increments {
            outcome = Outcome::MaxIncrements;
            break;
        }
        let lam_b = sys.lpf(&state);
        let lam = (lam_b + step).min(settings.target_lpf);
        sys.evaluate(&state, &vec![0.0; n], true)?;
        let guess: Vec<f64> = sys.solve(&qf).iter().map(|v| v * (lam - lam_b)).collect();
        match newton_at(sys, &state, guess, lam, &qf, &conv, settings.max_iterations) {
            Ok((du, it, inertia)) => {
                inc += 1;
                total += it;
                state = sys.accept(&state, &du, lam)?;
                let p = PathPoint {
                    increment: inc,
                    lpf: lam,
                    monitors: sys.monitors(&state),
                    iterations: it,
                    arc_length: lam - lam_b,
                    inertia,
                    seconds: clock.elapsed().as_secs_f64(),
                };
                observe(&state, &p);
                points.push(p);
                step = (step * 2.0).min(step0);
            }
            Err(e) => {
                step *= 0.5;
                if step < step0 * settings.min_arc_length_factor.max(1e-6) {
                    outcome = Outcome::Failed(e.to_string());
                    break;
                }
            }
        }
    }
    Ok(PathResult { points, outcome, final_state: state, total_iterations: total })
}

/// One linear solve K_0 u = λ Q_f at the target load factor.
pub fn linear<S: EquilibriumSystem>(
    sys: &mut S,
    start: S::State,
    settings: &ContinuationSettings,
    mut observe: impl FnMut(&S::State, &PathPoint),
) -> Result<PathResult<S::State>> {
    let clock = Instant::now();
    let n = sys.num_equations();
    let (_, inertia) = sys.evaluate(&start, &vec![0.0; n], true)?;
    let lam = settings.target_lpf;
    let du: Vec<f64> = sys.solve(&sys.reference_load()).iter().map(|v| v * lam).collect();
    let state = sys.accept(&start, &du, lam)?;
    let p = PathPoint {
        increment: 1,
        lpf: lam,
        monitors: sys.monitors(&state),
        iterations: 1,
        arc_length: 0.0,
        inertia: inertia.unwrap_or(0),
        seconds: clock.elapsed().as_secs_f64(),
    };
    observe(&state, &p);
    Ok(PathResult { points: vec![p], outcome: Outcome::Completed, final_state: state, total_iterations: 1 })
}

/// Runs the method selected in `settings`.
pub fn trace<S: EquilibriumSystem>(
    sys: &mut S,
    start: S::State,
    settings: &ContinuationSettings,
    observe: impl FnMut(&S::State, &PathPoint),
) -> Result<PathResult<S::State>> {
    match settings.method {
        Method::ArcLength => {
            let variant = arc_length_registry().get(&settings.variant)?;
            arc_length(sys, start, settings, variant.as_ref(), observe)
        }
        Method::Newton => newton_raphson(sys, start, settings, observe),
        Method::Linear => linear(sys, start, settings, observe),
    }
}
