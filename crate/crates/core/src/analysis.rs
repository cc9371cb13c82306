//! Shell model as an equilibrium system for the path-following drivers.

use crate::assembly::{Configuration, TrialState};
use crate::continuation::EquilibriumSystem;
use crate::error::Result;
use crate::model::Model;
use crate::skyline::SkylineMatrix;

pub struct ShellSystem<'a> {
    model: &'a Model,
    tangent: SkylineMatrix,
    load: Vec<f64>,
    last: Option<(Vec<f64>, Vec<TrialState>)>,
}

impl<'a> ShellSystem<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        Ok(ShellSystem { model, tangent: model.new_tangent(), load: model.external_forces()?, last: None })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    fn full(&self, base: &Configuration, du: &[f64]) -> Vec<f64> {
        let dq = self.model.dofs.expand(du);
        base.q.iter().zip(&dq).map(|(a, b)| a + b).collect()
    }
}

impl EquilibriumSystem for ShellSystem<'_> {
    type State = Configuration;

    fn num_equations(&self) -> usize {
        self.model.dofs.num_equations()
    }

    fn reference_load(&self) -> Vec<f64> {
        self.load.clone()
    }

    fn evaluate(&mut self, base: &Configuration, du: &[f64], tangent: bool) -> Result<(Vec<f64>, Option<usize>)> {
        let q = self.full(base, du);
        let ev = self.model.evaluate(base, &q, tangent.then_some(&mut self.tangent))?;
        let inertia = if tangent { Some(self.tangent.factor()?) } else { None };
        self.last = Some((du.to_vec(), ev.trial));
        Ok((ev.internal, inertia))
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.tangent.solve(rhs)
    }

    fn accept(&mut self, base: &Configuration, du: &[f64], lpf: f64) -> Result<Configuration> {
        let q = self.full(base, du);
        let trial = match self.last.take() {
            Some((d, t)) if d == du => t,
            _ => self.model.evaluate(base, &q, None)?.trial,
        };
        self.model.commit(q, lpf, trial)
    }

    fn lpf(&self, state: &Configuration) -> f64 {
        state.lpf
    }

    fn monitors(&self, state: &Configuration) -> Vec<f64> {
        self.model.monitor_values(&state.q).unwrap_or_default()
    }
}
