use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FalsifyError, FeatureSpace};
use crate::sim::FeatureAssignment;
use crate::Real;

/// Consecutive rejected proposals before a local search restarts.
const RESTART_AFTER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Random,
    HillClimb,
    SimulatedAnnealing,
    Genetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    /// Number of objective evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Standard deviation of Gaussian steps in the unit cube.
    pub sigma: Real,
    pub initial_temperature: Real,
    /// Geometric cooling factor applied after every evaluation.
    pub cooling: Real,
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: Real,
    /// Per-gene mutation probability.
    pub mutation_rate: Real,
    pub stop_at_first_violation: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Random,
            budget: 200,
            seed: 0,
            sigma: 0.1,
            initial_temperature: 1.0,
            cooling: 0.99,
            population: 20,
            tournament: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            stop_at_first_violation: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), FalsifyError> {
        let bad = |m: &str| Err(FalsifyError::Config(m.to_string()));
        if self.budget < 1 {
            return bad("budget must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return bad("initial_temperature must be positive");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling must lie strictly between 0 and 1");
        }
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.tournament < 1 {
            return bad("tournament must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint<V> {
    /// Position in evaluation order, from 0.
    pub index: usize,
    pub assignment: FeatureAssignment,
    pub unit: Vec<Real>,
    pub robustness: Real,
    pub outcome: V,
}

/// Every evaluation of a search, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive<V> {
    pub points: Vec<EvaluatedPoint<V>>,
    /// Index of the lowest robustness; the earliest wins ties.
    pub best: Option<usize>,
    /// Indices with negative robustness.
    pub violations: Vec<usize>,
}

impl<V> Default for Archive<V> {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            best: None,
            violations: Vec::new(),
        }
    }
}

impl<V> Archive<V> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn best_point(&self) -> Option<&EvaluatedPoint<V>> {
        self.best.map(|i| &self.points[i])
    }

    pub fn push(&mut self, unit: Vec<Real>, assignment: FeatureAssignment, robustness: Real, outcome: V) {
        let index = self.points.len();
        if robustness < 0.0 {
            self.violations.push(index);
        }
        if self.best.is_none_or(|b| robustness < self.points[b].robustness) {
            self.best = Some(index);
        }
        self.points.push(EvaluatedPoint {
            index,
            assignment,
            unit,
            robustness,
            outcome,
        });
    }

    /// Re-derive `best` and `violations` from the points.
    pub fn reindex(&mut self) {
        self.best = None;
        self.violations.clear();
        for i in 0..self.points.len() {
            let r = self.points[i].robustness;
            if r < 0.0 {
                self.violations.push(i);
            }
            if self.best.is_none_or(|b| r < self.points[b].robustness) {
                self.best = Some(i);
            }
        }
    }
}

struct Runner<'a, V, F> {
    space: &'a FeatureSpace,
    config: &'a SearchConfig,
    evaluate: F,
    archive: Archive<V>,
}

impl<V: Send, F> Runner<'_, V, F>
where
    F: Fn(&FeatureAssignment) -> Result<(Real, V), FalsifyError> + Sync,
{
    fn remaining(&self) -> usize {
        self.config.budget - self.archive.len()
    }

    fn done(&self) -> bool {
        self.remaining() == 0
            || (self.config.stop_at_first_violation && !self.archive.violations.is_empty())
    }

    fn eval(&mut self, unit: Vec<Real>) -> Result<Real, FalsifyError> {
        let a = self.space.decode(&unit)?;
        let (r, v) = (self.evaluate)(&a)?;
        self.archive.push(unit, a, r, v);
        Ok(r)
    }

    /// Evaluate a batch, in parallel unless the search may stop early.
    fn eval_batch(&mut self, units: Vec<Vec<Real>>) -> Result<Vec<Real>, FalsifyError> {
        if self.config.stop_at_first_violation {
            let mut out = Vec::new();
            for u in units {
                if self.done() {
                    break;
                }
                out.push(self.eval(u)?);
            }
            return Ok(out);
        }
        let assignments = units
            .iter()
            .map(|u| self.space.decode(u))
            .collect::<Result<Vec<_>, _>>()?;
        let evaluate = &self.evaluate;
        let results: Vec<_> = assignments.par_iter().map(evaluate).collect();
        let mut out = Vec::with_capacity(units.len());
        for ((u, a), res) in units.into_iter().zip(assignments).zip(results) {
            let (r, v) = res?;
            self.archive.push(u, a, r, v);
            out.push(r);
        }
        Ok(out)
    }
}

fn uniform(rng: &mut ChaCha8Rng, d: usize) -> Vec<Real> {
    (0..d).map(|_| rng.gen::<Real>()).collect()
}

fn gaussian_step(rng: &mut ChaCha8Rng, x: &[Real], sigma: Real) -> Vec<Real> {
    x.iter()
        .map(|&xi| {
            let z: Real = rng.sample(StandardNormal);
            (xi + sigma * z).clamp(0.0, 1.0)
        })
        .collect()
}

/// Minimise `evaluate` over `space` within the configured budget.
///
/// The archive holds exactly `budget` evaluations, or fewer when
/// `stop_at_first_violation` is set and a negative robustness turns up.
pub fn run_search<V, F>(
    space: &FeatureSpace,
    config: &SearchConfig,
    evaluate: F,
) -> Result<Archive<V>, FalsifyError>
where
    V: Send,
    F: Fn(&FeatureAssignment) -> Result<(Real, V), FalsifyError> + Sync,
{
    config.validate()?;
    let mut run = Runner {
        space,
        config,
        evaluate,
        archive: Archive::default(),
    };
    let d = space.len();
    // proposals and acceptance draws come from separate streams so that
    // annealing and hill climbing see the same proposals for the same seed
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut accept_rng = ChaCha8Rng::seed_from_u64(config.seed);
    accept_rng.set_stream(1);

    match config.algorithm {
        Algorithm::Random => {
            let units = (0..config.budget).map(|_| uniform(&mut rng, d)).collect();
            run.eval_batch(units)?;
        }
        Algorithm::HillClimb | Algorithm::SimulatedAnnealing => {
            let annealing = config.algorithm == Algorithm::SimulatedAnnealing;
            let mut temp = config.initial_temperature;
            let mut x = uniform(&mut rng, d);
            let mut rx = run.eval(x.clone())?;
            let mut rejected = 0;
            while !run.done() {
                if rejected >= RESTART_AFTER {
                    x = uniform(&mut rng, d);
                    rx = run.eval(x.clone())?;
                    rejected = 0;
                } else {
                    let y = gaussian_step(&mut rng, &x, config.sigma);
                    let ry = run.eval(y.clone())?;
                    let delta = ry - rx;
                    // neutral moves are rejected so a cold anneal is a hill climb
                    let accept = delta < 0.0
                        || (annealing
                            && delta > 0.0
                            && accept_rng.gen::<Real>() < (-delta / temp).exp());
                    if accept {
                        x = y;
                        rx = ry;
                        rejected = 0;
                    } else {
                        rejected += 1;
                    }
                }
                if annealing {
                    temp *= config.cooling;
                }
            }
        }
        Algorithm::Genetic => genetic(&mut run, &mut rng, d)?,
    }
    Ok(run.archive)
}

fn genetic<V: Send, F>(run: &mut Runner<'_, V, F>, rng: &mut ChaCha8Rng, d: usize) -> Result<(), FalsifyError>
where
    F: Fn(&FeatureAssignment) -> Result<(Real, V), FalsifyError> + Sync,
{
    let cfg = run.config;
    let n0 = cfg.population.min(run.remaining());
    let units: Vec<_> = (0..n0).map(|_| uniform(rng, d)).collect();
    let fit = run.eval_batch(units.clone())?;
    let mut pop: Vec<(Vec<Real>, Real)> = units.into_iter().zip(fit).collect();

    while !run.done() && !pop.is_empty() {
        // elitism: the best individual (earliest on ties) survives unevaluated
        let elite = pop
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
            .map(|(_, p)| p.clone())
            .expect("population is non-empty");
        let n_children = (cfg.population - 1).min(run.remaining());
        let mut children = Vec::with_capacity(n_children);
        for _ in 0..n_children {
            let p1 = tournament(rng, &pop, cfg.tournament);
            let p2 = tournament(rng, &pop, cfg.tournament);
            let mut child: Vec<Real> = if rng.gen::<Real>() < cfg.crossover_rate {
                p1.iter()
                    .zip(p2)
                    .map(|(&a, &b)| if rng.gen::<bool>() { a } else { b })
                    .collect()
            } else {
                p1.clone()
            };
            for g in &mut child {
                if rng.gen::<Real>() < cfg.mutation_rate {
                    let z: Real = rng.sample(StandardNormal);
                    *g = (*g + cfg.sigma * z).clamp(0.0, 1.0);
                }
            }
            children.push(child);
        }
        let fit = run.eval_batch(children.clone())?;
        pop = std::iter::once(elite).chain(children.into_iter().zip(fit)).collect();
    }
    Ok(())
}

fn tournament<'p>(rng: &mut ChaCha8Rng, pop: &'p [(Vec<Real>, Real)], k: usize) -> &'p Vec<Real> {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k {
        let c = rng.gen_range(0..pop.len());
        if pop[c].1 < pop[best].1 || (pop[c].1 == pop[best].1 && c < best) {
            best = c;
        }
    }
    &pop[best].0
}
