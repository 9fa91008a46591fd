//! Particle swarm optimizer over flat real vectors.

use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PsoError {
    #[error("invalid swarm configuration: {0}")]
    Config(String),
    #[error("inconsistent swarm shape: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub population: usize,
    pub generations: usize,
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    pub seed: u64,
    /// Wall-clock limit; the run stops after the generation that crosses it.
    #[serde(default)]
    pub time_budget_ms: Option<u64>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            population: 40,
            generations: 200,
            w: 0.729,
            c1: 1.494_45,
            c2: 1.494_45,
            seed: 0,
            time_budget_ms: None,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), PsoError> {
        if self.population < 2 {
            return Err(PsoError::Config(format!(
                "population {} < 2",
                self.population
            )));
        }
        if self.generations < 1 {
            return Err(PsoError::Config("generations must be at least 1".into()));
        }
        if ![self.w, self.c1, self.c2].iter().all(|v| v.is_finite()) {
            return Err(PsoError::Config("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// One independent stream per particle, so results do not depend on
    /// evaluation order.
    pub fn streams(&self, salt: u64) -> Vec<ChaCha8Rng> {
        (0..self.population)
            .map(|z| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream((salt << 32) | z as u64);
                rng
            })
            .collect()
    }
}

/// Per-dimension position box and velocity limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<S> {
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub vmax: Vec<S>,
}

impl<S: Scalar> Bounds<S> {
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![S::neg_infinity(); dim],
            upper: vec![S::infinity(); dim],
            vmax: vec![S::infinity(); dim],
        }
    }

    pub fn clamp(&self, x: &mut [S]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.max(self.lower[k]).min(self.upper[k]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState<S> {
    pub positions: Vec<Vec<S>>,
    pub velocities: Vec<Vec<S>>,
    pub personal_best: Vec<Vec<S>>,
    pub personal_best_obj: Vec<S>,
    pub global_best: Vec<S>,
    pub global_best_obj: S,
}

fn argmin<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn evaluate<S, F>(positions: &[Vec<S>], objective: &F) -> Vec<S>
where
    S: Scalar,
    F: Fn(&[S]) -> S + Sync,
{
    positions
        .par_iter()
        .map(|p| {
            let v = objective(p);
            if v.is_nan() {
                S::infinity()
            } else {
                v
            }
        })
        .collect()
}

impl<S: Scalar> SwarmState<S> {
    /// Zero velocities; personal bests at the starting positions.
    pub fn new<F>(positions: Vec<Vec<S>>, objective: &F) -> Result<Self, PsoError>
    where
        F: Fn(&[S]) -> S + Sync,
    {
        let dim = positions
            .first()
            .map(Vec::len)
            .ok_or_else(|| PsoError::Shape("empty swarm".into()))?;
        if positions.iter().any(|p| p.len() != dim) {
            return Err(PsoError::Shape("particles differ in dimension".into()));
        }
        let obj = evaluate(&positions, objective);
        let g = argmin(&obj);
        Ok(Self {
            velocities: vec![vec![S::zero(); dim]; positions.len()],
            personal_best: positions.clone(),
            global_best: positions[g].clone(),
            global_best_obj: obj[g],
            personal_best_obj: obj,
            positions,
        })
    }

    pub fn dim(&self) -> usize {
        self.global_best.len()
    }
}

/// One generation: velocity and position update with fresh uniform
/// r_p, r_g per particle and dimension, then personal bests replaced only
/// on strict improvement and the global best taken over personal bests.
pub fn pso_step<S, F>(
    state: &SwarmState<S>,
    objective: &F,
    cfg: &PsoConfig,
    bounds: &Bounds<S>,
    rngs: &mut [ChaCha8Rng],
) -> Result<SwarmState<S>, PsoError>
where
    S: Scalar,
    F: Fn(&[S]) -> S + Sync,
{
    let n = state.positions.len();
    let dim = state.dim();
    if rngs.len() != n
        || state.velocities.len() != n
        || state.personal_best.len() != n
        || state.personal_best_obj.len() != n
        || bounds.lower.len() != dim
        || bounds.upper.len() != dim
        || bounds.vmax.len() != dim
    {
        return Err(PsoError::Shape(format!("{n} particles of dimension {dim}")));
    }
    let (w, c1, c2) = (S::lit(cfg.w), S::lit(cfg.c1), S::lit(cfg.c2));
    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for z in 0..n {
        let x = &state.positions[z];
        let p = &state.personal_best[z];
        let g = &state.global_best;
        let mut v = state.velocities[z].clone();
        let mut next = x.clone();
        for k in 0..dim {
            let rp = S::lit(rngs[z].gen::<f64>());
            let rg = S::lit(rngs[z].gen::<f64>());
            let vk = w * v[k] + c1 * rp * (p[k] - x[k]) + c2 * rg * (g[k] - x[k]);
            v[k] = vk.max(-bounds.vmax[k]).min(bounds.vmax[k]);
            next[k] = x[k] + v[k];
        }
        bounds.clamp(&mut next);
        positions.push(next);
        velocities.push(v);
    }
    let obj = evaluate(&positions, objective);
    let mut personal_best = state.personal_best.clone();
    let mut personal_best_obj = state.personal_best_obj.clone();
    for z in 0..n {
        if obj[z] < personal_best_obj[z] {
            personal_best[z] = positions[z].clone();
            personal_best_obj[z] = obj[z];
        }
    }
    let g = argmin(&personal_best_obj);
    let (global_best, global_best_obj) = if personal_best_obj[g] < state.global_best_obj {
        (personal_best[g].clone(), personal_best_obj[g])
    } else {
        (state.global_best.clone(), state.global_best_obj)
    };
    Ok(SwarmState {
        positions,
        velocities,
        personal_best,
        personal_best_obj,
        global_best,
        global_best_obj,
    })
}

/// Result of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct PsoRun<S> {
    pub state: SwarmState<S>,
    /// Global-best objective after initialization and after each generation.
    pub history: Vec<S>,
}

/// Runs `cfg.generations` steps from the given initial positions, fewer if
/// the time budget runs out.
pub fn run_pso<S, F>(
    initial: Vec<Vec<S>>,
    objective: &F,
    cfg: &PsoConfig,
    bounds: &Bounds<S>,
    salt: u64,
) -> Result<PsoRun<S>, PsoError>
where
    S: Scalar,
    F: Fn(&[S]) -> S + Sync,
{
    cfg.validate()?;
    if initial.len() != cfg.population {
        return Err(PsoError::Shape(format!(
            "{} initial particles for population {}",
            initial.len(),
            cfg.population
        )));
    }
    let mut rngs = cfg.streams(salt);
    let mut state = SwarmState::new(initial, objective)?;
    let mut history = vec![state.global_best_obj];
    let deadline = cfg
        .time_budget_ms
        .map(|ms| Instant::now() + Duration::from_millis(ms));
    for _ in 0..cfg.generations {
        state = pso_step(&state, objective, cfg, bounds, &mut rngs)?;
        history.push(state.global_best_obj);
        if deadline.is_some_and(|d| Instant::now() >= d) {
            log::warn!("swarm stopped after {} of {} generations", history.len() - 1, cfg.generations);
            break;
        }
    }
    Ok(PsoRun { state, history })
}
