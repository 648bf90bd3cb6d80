use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::localpath::LocalPath;

use super::{check_speed, Instance, Tour};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    /// Weight on the previous velocity.
    pub inertia: f64,
    /// Per-dimension velocity bound, in key units. Keys start in [0, 1], so
    /// the default lets a key cross the whole initial range in one step;
    /// tighter bounds make the undamped swarm stall early.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            iterations: 300,
            inertia: 1.0,
            velocity_clamp: 1.0,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::InvalidParameter("swarm size must be >= 2".into()));
        }
        if !self.inertia.is_finite() {
            return Err(Error::InvalidParameter("inertia must be finite".into()));
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return Err(Error::InvalidParameter(
                "velocity clamp must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Best tour plus the global-best length after initialization and after
/// every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PsoTrace {
    pub tour: Tour,
    pub best_length_history: Vec<f64>,
}

/// Random-key decoding: ids of the paths sorted by ascending key, equal
/// keys by position.
fn decode(keys: &[f64]) -> Vec<usize> {
    let mut slots: Vec<usize> = (0..keys.len()).collect();
    slots.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    slots
}

struct Particle {
    position: Vec<f64>,
    velocity: Vec<f64>,
    best_position: Vec<f64>,
    best_length: f64,
}

/// Orders local paths with particle swarm optimization.
///
/// Each particle holds one real key per path; sorting the keys gives the
/// visiting order and the directions for that order are solved exactly.
/// Fitness is tour length (equivalently time, at constant speed). Per
/// iteration and particle, the acceleration coefficients `c1`, `c2` are
/// drawn from U[0, 1] and the per-dimension factors `r1`, `r2` likewise:
///
/// `v = w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)`, clamped, then `x += v`.
pub fn pso_optimize(paths: &[LocalPath], speed: f64, cfg: &PsoConfig) -> Result<Tour> {
    pso_optimize_traced(paths, speed, cfg).map(|t| t.tour)
}

pub fn pso_optimize_traced(paths: &[LocalPath], speed: f64, cfg: &PsoConfig) -> Result<PsoTrace> {
    check_speed(speed)?;
    cfg.validate()?;
    if paths.is_empty() {
        return Err(Error::EmptyInput("no local paths to order"));
    }
    let inst = Instance::new(paths)?;
    let dim = inst.len();
    let vmax = cfg.velocity_clamp;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let fitness = |keys: &[f64]| inst.best_directions(&decode(keys)).1;

    let mut swarm: Vec<Particle> = (0..cfg.swarm_size)
        .map(|_| {
            let position: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let velocity: Vec<f64> = (0..dim).map(|_| rng.random_range(-vmax..=vmax)).collect();
            Particle {
                best_position: position.clone(),
                position,
                velocity,
                best_length: f64::INFINITY,
            }
        })
        .collect();
    let initial: Vec<f64> = swarm.par_iter().map(|p| fitness(&p.position)).collect();
    for (p, f) in swarm.iter_mut().zip(initial) {
        p.best_length = f;
    }
    let mut global = 0;
    for k in 1..swarm.len() {
        if swarm[k].best_length < swarm[global].best_length {
            global = k;
        }
    }
    let mut global_position = swarm[global].best_position.clone();
    let mut global_length = swarm[global].best_length;
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(global_length);

    for _ in 0..cfg.iterations {
        for p in swarm.iter_mut() {
            let c1: f64 = rng.random();
            let c2: f64 = rng.random();
            for (d, &g) in global_position.iter().enumerate() {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = cfg.inertia * p.velocity[d]
                    + c1 * r1 * (p.best_position[d] - p.position[d])
                    + c2 * r2 * (g - p.position[d]);
                p.velocity[d] = v.clamp(-vmax, vmax);
                p.position[d] += p.velocity[d];
            }
        }
        let lengths: Vec<f64> = swarm.par_iter().map(|p| fitness(&p.position)).collect();
        for (p, f) in swarm.iter_mut().zip(lengths) {
            if f < p.best_length {
                p.best_length = f;
                p.best_position.clone_from(&p.position);
            }
        }
        for p in &swarm {
            if p.best_length < global_length {
                global_length = p.best_length;
                global_position.clone_from(&p.best_position);
            }
        }
        history.push(global_length);
    }

    let slots = decode(&global_position);
    let (dirs, _) = inst.best_directions(&slots);
    Ok(PsoTrace {
        tour: inst.tour(&slots, dirs, speed),
        best_length_history: history,
    })
}
