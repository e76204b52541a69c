//! Collision detection, discrete-log extraction, and the collision-time bounds.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixing::{self, MixingError};
use crate::modmath::{mod_inverse, mod_pow, validate_group, GroupError, GroupInstance, OddModulus};
use crate::rng::{splitmix64_finalize, Domain};
use crate::walk::{iterate_f, ExponentState, ExponentTag, PartitionMode, PartitionOracle, WalkParams};

/// Step budget used when computing `τ_s(1/2)` for the collision harness.
pub const TAU_STEP_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("NoCollisionWithinBudget: no revisit within {0} steps")]
    NoCollisionWithinBudget(u64),
    #[error("DegenerateCollision: beta = b = {b} (mod p), collision carries no information")]
    DegenerateCollision { b: u64 },
    #[error("ExhaustedAttempts: every one of {0} attempts ended in a degenerate collision")]
    ExhaustedAttempts(u32),
    #[error("VerificationFailed: x^{k} != y")]
    VerificationFailed { k: u64 },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Mixing(#[from] MixingError),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}

impl SolverError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NoCollisionWithinBudget(_) => "NoCollisionWithinBudget",
            Self::DegenerateCollision { .. } => "DegenerateCollision",
            Self::ExhaustedAttempts(_) => "ExhaustedAttempts",
            Self::VerificationFailed { .. } => "VerificationFailed",
            Self::Group(e) => e.name(),
            Self::Mixing(e) => e.name(),
            Self::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

/// The first revisit of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub first_index: u64,
    pub second_index: u64,
    /// The repeated state: a position on `Z_p`, or a group element.
    pub state: u64,
    pub first_tag: ExponentTag,
    pub second_tag: ExponentTag,
}

/// Runs the exponent walk from `start` until it first revisits a position.
pub fn find_collision(
    params: &WalkParams,
    oracle: &mut PartitionOracle,
    start: ExponentState,
    max_steps: u64,
) -> Result<CollisionEvent, SolverError> {
    let mut visited: HashMap<u64, (u64, ExponentTag)> = HashMap::new();
    let mut st = start;
    visited.insert(st.position, (0, st.tag));
    for n in 1..=max_steps {
        let mv = oracle.assign(st.position);
        st = st.step(mv, params);
        if let Some(&(first_index, first_tag)) = visited.get(&st.position) {
            return Ok(CollisionEvent {
                first_index,
                second_index: n,
                state: st.position,
                first_tag,
                second_tag: st.tag,
            });
        }
        visited.insert(st.position, (n, st.tag));
    }
    Err(SolverError::NoCollisionWithinBudget(max_steps))
}

/// Runs the group walk from `(g, tag)` until it first revisits an element.
pub fn find_group_collision(
    inst: &GroupInstance,
    oracle: &mut PartitionOracle,
    g: u64,
    tag: ExponentTag,
    max_steps: u64,
) -> Result<CollisionEvent, SolverError> {
    let mut visited: HashMap<u64, (u64, ExponentTag)> = HashMap::new();
    let (mut g, mut tag) = (g, tag);
    visited.insert(g, (0, tag));
    for n in 1..=max_steps {
        (g, tag) = iterate_f(g, tag, inst, oracle);
        if let Some(&(first_index, first_tag)) = visited.get(&g) {
            return Ok(CollisionEvent { first_index, second_index: n, state: g, first_tag, second_tag: tag });
        }
        visited.insert(g, (n, tag));
    }
    Err(SolverError::NoCollisionWithinBudget(max_steps))
}

/// `k ≡ (a − α)(β − b)^{−1} (mod p)`.
pub fn extract_dlog(a: u64, b: u64, alpha: u64, beta: u64, p: OddModulus) -> Result<u64, SolverError> {
    let p = p.get();
    let (a, b, alpha, beta) = (a % p, b % p, alpha % p, beta % p);
    let denom = (beta + p - b) % p;
    let inv = mod_inverse(denom, p).map_err(|_| SolverError::DegenerateCollision { b })?;
    let num = (a + p - alpha) % p;
    Ok(crate::modmath::mod_mul(num, inv, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub k: u64,
    /// Attempts used, including the successful one.
    pub attempts: u32,
    pub degenerate_collisions: u32,
    /// Steps of the successful walk up to its collision.
    pub steps: u64,
}

/// Recovers `k` with `x^k = y` using lazily sampled random partitions.
pub fn solve(inst: &GroupInstance, seed: u64, max_attempts: u32) -> Result<SolveOutcome, SolverError> {
    solve_with_mode(inst, seed, max_attempts, PartitionMode::LazyRandom)
}

/// As [`solve`]; every attempt draws a fresh partition from `seed`.
pub fn solve_with_mode(
    inst: &GroupInstance,
    seed: u64,
    max_attempts: u32,
    mode: PartitionMode,
) -> Result<SolveOutcome, SolverError> {
    let inst = validate_group(*inst)?;
    let p = OddModulus::new(inst.p).expect("validated p is an odd prime");
    let mut degenerate = 0;
    for attempt in 0..max_attempts {
        let mut oracle = match mode {
            PartitionMode::LazyRandom => {
                PartitionOracle::lazy_random_stream(seed, Domain::Solver, attempt as u64)
            }
            PartitionMode::Hashed => {
                PartitionOracle::hashed(seed ^ splitmix64_finalize(attempt as u64 + 1))
            }
        };
        // Only p distinct elements exist, so p steps always produce a revisit.
        let ev = find_group_collision(&inst, &mut oracle, inst.x, ExponentTag::new(1, 0), inst.p)?;
        match extract_dlog(ev.first_tag.a, ev.first_tag.b, ev.second_tag.a, ev.second_tag.b, p) {
            Ok(k) => {
                if mod_pow(inst.x, k, inst.q) != inst.y {
                    return Err(SolverError::VerificationFailed { k });
                }
                return Ok(SolveOutcome {
                    k,
                    attempts: attempt + 1,
                    degenerate_collisions: degenerate,
                    steps: ev.second_index,
                });
            }
            Err(SolverError::DegenerateCollision { .. }) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    Err(SolverError::ExhaustedAttempts(max_attempts))
}

/// Step budget after which a collision has probability at least `1 − e^{−c}`:
/// `⌈1 + τ + 2√(2·c·|G|·τ)⌉`.
pub fn collision_bound(tau_half: u64, group_size: u64, c: f64) -> u64 {
    let tau = tau_half as f64;
    (1.0 + tau + 2.0 * (2.0 * c * group_size as f64 * tau).sqrt()).ceil() as u64
}

/// Collision budget measured through the block walk's mixing time, and the
/// probability floor `1 − e^{−c} − 32/t` it guarantees (possibly negative).
pub fn block_collision_bound(tau_block: u64, group_size: u64, c: f64) -> (u64, f64) {
    let tau = tau_block as f64;
    let t = (4.0 * (1.0 + tau + 2.0 * (2.0 * c * group_size as f64 * tau).sqrt())).ceil() as u64;
    (t, 1.0 - (-c).exp() - 32.0 / t as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionStats {
    pub p: u64,
    pub k: u64,
    pub c: f64,
    pub trials: u64,
    pub tau_half: u64,
    pub steps_to_collision: Vec<u64>,
    pub bound_used: u64,
    pub fraction_within_bound: f64,
    /// `1 − e^{−c}`.
    pub guaranteed: f64,
    /// Binomial standard deviation of the fraction at probability `1 − e^{−c}`.
    pub sigma: f64,
    /// Whether `fraction_within_bound ≥ 1 − e^{−c} − 3σ`.
    pub holds: bool,
}

/// Monte Carlo check of the collision bound with independent random partitions.
pub fn collision_experiment(
    params: &WalkParams,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<CollisionStats, SolverError> {
    if !(c > 0.0) || trials == 0 {
        return Err(SolverError::InvalidArgument(format!("c = {c}, trials = {trials}")));
    }
    let tau = mixing::tau_s(params, 0.5, TAU_STEP_BUDGET)?.tau;
    let p = params.p().get();
    let bound = collision_bound(tau, p, c);
    let start = ExponentState::new(1, 0, params);
    let steps: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut oracle = PartitionOracle::lazy_random_stream(seed, Domain::Collision, i);
            find_collision(params, &mut oracle, start, p).map(|ev| ev.second_index)
        })
        .collect::<Result<_, _>>()?;
    let within = steps.iter().filter(|&&s| s <= bound).count();
    let fraction = within as f64 / trials as f64;
    let miss = (-c).exp();
    let sigma = (miss * (1.0 - miss) / trials as f64).sqrt();
    Ok(CollisionStats {
        p,
        k: params.k(),
        c,
        trials,
        tau_half: tau,
        steps_to_collision: steps,
        bound_used: bound,
        fraction_within_bound: fraction,
        guaranteed: 1.0 - miss,
        sigma,
        holds: fraction >= 1.0 - miss - 3.0 * sigma,
    })
}
