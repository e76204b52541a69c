//! Exact distribution evolution for `R`, `K`, and the block walk, with
//! separation / total-variation distances and exact separation mixing times.

use std::ops::Index;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modmath::OddModulus;
use crate::walk::WalkParams;

/// Largest cycle for which all-starts evolution is attempted.
pub const MAX_EXACT_MODULUS: u64 = 4096;

/// Tolerance on `Σ v = 1` for a [`ProbVector`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Slack allowed when checking that a separation curve never increases.
pub const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixingError {
    #[error("InvalidProbVector: {0}")]
    InvalidProbVector(String),
    #[error("LengthMismatch: expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("NotMixedWithinBudget: separation still above epsilon after {0} steps")]
    NotMixedWithinBudget(u64),
    #[error("TooLargeForExact: p = {p} exceeds {limit}")]
    TooLargeForExact { p: u64, limit: u64 },
    #[error("InvalidEpsilon: epsilon = {0} must be positive")]
    InvalidEpsilon(f64),
}

impl MixingError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidProbVector(_) => "InvalidProbVector",
            Self::LengthMismatch { .. } => "LengthMismatch",
            Self::NotMixedWithinBudget(_) => "NotMixedWithinBudget",
            Self::TooLargeForExact { .. } => "TooLargeForExact",
            Self::InvalidEpsilon(_) => "InvalidEpsilon",
        }
    }
}

/// Compensated summation.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// A probability distribution on `Z_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, MixingError> {
        if entries.is_empty() {
            return Err(MixingError::InvalidProbVector("empty".into()));
        }
        if let Some((i, v)) = entries.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(MixingError::InvalidProbVector(format!("entry {i} = {v}")));
        }
        let total = kahan_sum(entries.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(MixingError::InvalidProbVector(format!("total mass {total}")));
        }
        Ok(Self(entries))
    }

    pub fn point_mass(p: OddModulus, at: u64) -> Self {
        let mut v = vec![0.0; p.size()];
        v[(at % p.get()) as usize] = 1.0;
        Self(v)
    }

    pub fn uniform(p: OddModulus) -> Self {
        Self(vec![1.0 / p.get() as f64; p.size()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.0.iter().copied())
    }
}

impl Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn check_len(v: &ProbVector, p: usize) -> Result<(), MixingError> {
    if v.len() != p {
        return Err(MixingError::LengthMismatch { expected: p, got: v.len() });
    }
    Ok(())
}

pub(crate) fn push_r(src: &[f64], dst: &mut [f64], params: &WalkParams) {
    let p = params.p().get() as usize;
    let k = params.k() as usize;
    dst.fill(0.0);
    for (i, &mass) in src.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let w = mass / 3.0;
        dst[(i + 1) % p] += w;
        dst[(i + k) % p] += w;
        dst[2 * i % p] += w;
    }
}

pub(crate) fn push_k(src: &[f64], dst: &mut [f64]) {
    let p = src.len();
    dst.fill(0.0);
    for (i, &mass) in src.iter().enumerate() {
        let w = mass / 2.0;
        let d = 2 * i % p;
        dst[d] += w;
        dst[(d + p - 1) % p] += w;
    }
}

/// Doubles `src` then convolves with `mu`.
pub(crate) fn push_block(src: &[f64], mu: &[f64], dst: &mut [f64]) {
    let p = src.len();
    dst.fill(0.0);
    for (j, &mass) in src.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let base = 2 * j % p;
        let (head, tail) = dst.split_at_mut(base);
        // dst[(base + c) mod p] += mass * mu[c]
        for (d, &m) in tail.iter_mut().zip(mu) {
            *d += mass * m;
        }
        for (d, &m) in head.iter_mut().zip(&mu[p - base..]) {
            *d += mass * m;
        }
    }
}

/// One step of `R` applied to a distribution.
pub fn pushforward_r(v: &ProbVector, params: &WalkParams) -> Result<ProbVector, MixingError> {
    check_len(v, params.p().size())?;
    let mut out = vec![0.0; v.len()];
    push_r(&v.0, &mut out, params);
    Ok(ProbVector(out))
}

/// One step of `K` applied to a distribution.
pub fn pushforward_k(v: &ProbVector, p: OddModulus) -> Result<ProbVector, MixingError> {
    check_len(v, p.size())?;
    let mut out = vec![0.0; v.len()];
    push_k(&v.0, &mut out);
    Ok(ProbVector(out))
}

/// One block step `X ↦ 2X + b` with `b ~ mu`.
pub fn pushforward_block(v: &ProbVector, mu: &ProbVector) -> Result<ProbVector, MixingError> {
    check_len(mu, v.len())?;
    let mut out = vec![0.0; v.len()];
    push_block(&v.0, &mu.0, &mut out);
    Ok(ProbVector(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub sep: f64,
    pub tv: f64,
}

fn separation(v: &[f64]) -> f64 {
    let p = v.len() as f64;
    v.iter().map(|&x| 1.0 - p * x).fold(f64::NEG_INFINITY, f64::max)
}

/// Separation and total-variation distance to uniform.
pub fn distances(v: &ProbVector) -> Distances {
    let u = 1.0 / v.len() as f64;
    Distances {
        sep: separation(&v.0),
        tv: 0.5 * kahan_sum(v.0.iter().map(|&x| (x - u).abs())),
    }
}

/// Exact separation mixing time, worst case over all start states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub p: u64,
    pub k: u64,
    pub epsilon: f64,
    pub tau: u64,
    /// First step at which each start's separation is at most `epsilon`.
    pub per_start_tau: Vec<u64>,
    /// Worst-start separation at steps `0..=tau`.
    pub sep_curve: Vec<f64>,
}

/// Evolves a point mass at every state in lockstep, calling `observe` with the
/// per-start separations after each step (step 0 is the point masses). Stops
/// when `observe` returns `true` or after `max_steps` steps.
fn evolve_all_starts<S, O>(p: usize, step: S, max_steps: u64, mut observe: O) -> bool
where
    S: Fn(&[f64], &mut [f64]) + Sync,
    O: FnMut(u64, &[f64]) -> bool,
{
    let mut rows: Vec<Vec<f64>> = (0..p)
        .map(|x| {
            let mut r = vec![0.0; p];
            r[x] = 1.0;
            r
        })
        .collect();
    let mut scratch: Vec<Vec<f64>> = vec![vec![0.0; p]; p];
    let mut seps: Vec<f64> = rows.par_iter().map(|r| separation(r)).collect();
    if observe(0, &seps) {
        return true;
    }
    for t in 1..=max_steps {
        rows.par_iter()
            .zip(scratch.par_iter_mut())
            .zip(seps.par_iter_mut())
            .for_each(|((src, dst), sep)| {
                step(src, dst);
                *sep = separation(dst);
            });
        std::mem::swap(&mut rows, &mut scratch);
        if observe(t, &seps) {
            return true;
        }
    }
    false
}

fn check_exact_size(p: OddModulus) -> Result<(), MixingError> {
    if p.get() > MAX_EXACT_MODULUS {
        return Err(MixingError::TooLargeForExact { p: p.get(), limit: MAX_EXACT_MODULUS });
    }
    Ok(())
}

fn mixing_time<S>(
    p: OddModulus,
    k: u64,
    epsilon: f64,
    max_steps: u64,
    step: S,
) -> Result<MixingReport, MixingError>
where
    S: Fn(&[f64], &mut [f64]) + Sync,
{
    check_exact_size(p)?;
    if !(epsilon > 0.0) {
        return Err(MixingError::InvalidEpsilon(epsilon));
    }
    let n = p.size();
    let mut per_start: Vec<Option<u64>> = vec![None; n];
    let mut curve = Vec::new();
    let mixed = evolve_all_starts(n, step, max_steps, |t, seps| {
        curve.push(seps.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        for (slot, &s) in per_start.iter_mut().zip(seps) {
            if slot.is_none() && s <= epsilon {
                *slot = Some(t);
            }
        }
        per_start.iter().all(Option::is_some)
    });
    if !mixed {
        return Err(MixingError::NotMixedWithinBudget(max_steps));
    }
    debug_assert!(curve.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK));
    let per_start_tau: Vec<u64> = per_start.into_iter().map(Option::unwrap).collect();
    Ok(MixingReport {
        p: p.get(),
        k,
        epsilon,
        tau: per_start_tau.iter().copied().max().unwrap_or(0),
        per_start_tau,
        sep_curve: curve,
    })
}

/// `τ_s(ε)` of `R`.
pub fn tau_s(params: &WalkParams, epsilon: f64, max_steps: u64) -> Result<MixingReport, MixingError> {
    let params = *params;
    mixing_time(params.p(), params.k(), epsilon, max_steps, move |src, dst| {
        push_r(src, dst, &params)
    })
}

/// `τ_s(ε)` of the block walk with the `k = p − 1` increment law, in blocks.
pub fn tau_s_block(p: OddModulus, epsilon: f64, max_blocks: u64) -> Result<MixingReport, MixingError> {
    let mu = block_increment_law(p).into_inner();
    mixing_time(p, p.get() - 1, epsilon, max_blocks, move |src, dst| push_block(src, &mu, dst))
}

/// Worst-start separation of `R` at steps `0..=steps`.
pub fn separation_curve(params: &WalkParams, steps: u64) -> Result<Vec<f64>, MixingError> {
    check_exact_size(params.p())?;
    let params = *params;
    let mut curve = Vec::with_capacity(steps as usize + 1);
    evolve_all_starts(
        params.p().size(),
        move |src, dst| push_r(src, dst, &params),
        steps,
        |_, seps| {
            curve.push(seps.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            false
        },
    );
    Ok(curve)
}

/// `(3 − √5)/2`, the decay ratio of the block increment law.
pub fn increment_ratio() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

/// `Pr[b = k]` over the integers: `(1/√5)·q^|k|`.
pub fn increment_weight(k: i64) -> f64 {
    increment_ratio().powi(k.unsigned_abs().min(i32::MAX as u64) as i32) / 5f64.sqrt()
}

/// `a_0, a_1, …` up to the last weight that is at least `1e−15`.
pub fn unfolded_increment_law() -> Vec<f64> {
    (0..).map(increment_weight).take_while(|&a| a >= 1e-15).collect()
}

/// The block increment law for `k = p − 1`, folded onto `Z_p`.
pub fn block_increment_law(p: OddModulus) -> ProbVector {
    let q = increment_ratio();
    let n = p.get() as i32;
    let scale = 1.0 / (5f64.sqrt() * (1.0 - q.powi(n)));
    let entries = (0..n)
        .map(|j| {
            if j == 0 {
                scale * (1.0 + q.powi(n))
            } else {
                scale * (q.powi(j) + q.powi(n - j))
            }
        })
        .collect();
    ProbVector(entries)
}
