//! Strong stationary time for the rho walk on `Z_p` with `p = 2^m − 1`.
//!
//! The walk is driven by symbols `R_t` uniform on `1..=9`: 1–3 step by `+1`,
//! 4–6 by `+k`, 7–9 double. The symbols since the previous doubling form a
//! history; the two special shapes `(7)` and `(a, d)` with `a ∈ 1..=3`,
//! `d ∈ 7..=9` cover ground exactly 0 and 1 and so act as fair coins.
//!
//! Histories are consumed in super-rounds of `s = r·m`. History `j` of a
//! super-round belongs to Block `((j − 1) mod m) + 1`, and `C_i` is the bit of
//! the first special history in Block `i`. A super-round that ends with every
//! `C_i` defined and not all equal to 1 stops the walk at its closing doubling
//! step; otherwise all `C_i` are cleared and the next super-round begins.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modmath::OddModulus;
use crate::rng::{self, Domain};

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SstError {
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
    #[error("MalformedHistory: {0:?} does not end in 7, 8 or 9")]
    MalformedHistory(Vec<u8>),
    #[error("BudgetExceeded: no stop within {max_steps} steps")]
    BudgetExceeded { max_steps: u64, trace: Box<SstTrace> },
}

impl SstError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidParams(_) => "InvalidParams",
            Self::MalformedHistory(_) => "MalformedHistory",
            Self::BudgetExceeded { .. } => "BudgetExceeded",
        }
    }
}

/// `⌈3·ln m / ln(9/7)⌉`.
pub fn default_rounds(m: u32) -> u32 {
    (3.0 * (m as f64).ln() / (9.0f64 / 7.0).ln()).ceil() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SstBudget {
    pub r: u32,
    /// `9·m·r` steps; the stopping time is within it with probability above 1/2.
    pub steps: u64,
}

pub fn sst_budget(m: u32) -> Result<SstBudget, SstError> {
    if m < 2 {
        return Err(SstError::InvalidParams(format!("m = {m} < 2")));
    }
    let r = default_rounds(m);
    Ok(SstBudget { r, steps: 9 * m as u64 * r as u64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SstParams {
    m: u32,
    k: u64,
    r: u32,
}

impl SstParams {
    /// Parameters for `p = 2^m − 1`; `r` defaults to [`default_rounds`].
    pub fn new(m: u32, k: u64, r: Option<u32>) -> Result<Self, SstError> {
        if !(2..=40).contains(&m) {
            return Err(SstError::InvalidParams(format!("m = {m} not in [2, 40]")));
        }
        let p = (1u64 << m) - 1;
        if k == 0 || k >= p {
            return Err(SstError::InvalidParams(format!("k = {k} not in [1, {p})")));
        }
        let r = r.unwrap_or_else(|| default_rounds(m));
        if r == 0 {
            return Err(SstError::InvalidParams("r = 0".into()));
        }
        Ok(Self { m, k, r })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn p(&self) -> u64 {
        (1u64 << self.m) - 1
    }

    pub fn modulus(&self) -> OddModulus {
        OddModulus::new(self.p()).expect("2^m - 1 is odd and >= 3")
    }

    /// Histories per super-round, `r·m`.
    pub fn s(&self) -> u64 {
        self.r as u64 * self.m as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistoryClass {
    /// `(7)`: ground covered 0.
    Special0,
    /// `(a, d)` with `a ∈ 1..=3`, `d ∈ 7..=9`: ground covered 1.
    Special1,
    NotSpecial,
}

impl HistoryClass {
    pub fn bit(self) -> Option<u8> {
        match self {
            Self::Special0 => Some(0),
            Self::Special1 => Some(1),
            Self::NotSpecial => None,
        }
    }
}

#[inline]
fn is_doubling(symbol: u8) -> bool {
    (7..=9).contains(&symbol)
}

pub fn classify_history(h: &[u8]) -> Result<HistoryClass, SstError> {
    match h {
        [.., last] if is_doubling(*last) => Ok(match h {
            [7] => HistoryClass::Special0,
            [1..=3, _] => HistoryClass::Special1,
            _ => HistoryClass::NotSpecial,
        }),
        _ => Err(SstError::MalformedHistory(h.to_vec())),
    }
}

/// A completed history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// Ground covered by the `+1`/`+k` moves, mod `p`.
    pub b: u64,
    /// Step index `T_i` of the closing doubling move.
    pub end_step: u64,
    pub class: HistoryClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundOutcome {
    /// All `C_i` defined and not all 1: the walk stops.
    Stopped,
    /// All `C_i` equal 1: discarded.
    AllOnes,
    /// Some `C_i` undefined: discarded.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperRound {
    pub c: Vec<Option<u8>>,
    pub end_step: u64,
    pub outcome: RoundOutcome,
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SstTrace {
    pub params: SstParams,
    /// `R_1, R_2, …`; the step clock is its length.
    #[serde(with = "rle")]
    pub symbols: Vec<u8>,
    /// `Y_0, Y_1, …`, one more entry than `symbols`.
    #[serde(skip)]
    pub positions: Vec<u64>,
    pub histories: Vec<HistoryRecord>,
    /// Symbols of the history in progress.
    pub current_history: Vec<u8>,
    pub super_rounds: Vec<SuperRound>,
    /// `C_1..C_m` of the super-round in progress.
    pub pending_c: Vec<Option<u8>>,
    /// The stopping time `T`, once realized.
    pub stop: Option<u64>,
}

impl SstTrace {
    fn new(params: SstParams) -> Self {
        Self {
            params,
            symbols: Vec::new(),
            positions: vec![0],
            histories: Vec::new(),
            current_history: Vec::new(),
            super_rounds: Vec::new(),
            pending_c: vec![None; params.m as usize],
            stop: None,
        }
    }

    pub fn steps(&self) -> u64 {
        self.symbols.len() as u64
    }

    /// `Y_T`, the position at the stopping time.
    pub fn position_at_stop(&self) -> Option<u64> {
        self.stop.map(|t| self.positions[t as usize])
    }

    /// Feeds one symbol.
    fn push(&mut self, symbol: u8) {
        let p = self.params.p();
        let y = *self.positions.last().expect("Y_0 is always present");
        let next = match symbol {
            1..=3 => (y + 1) % p,
            4..=6 => (y + self.params.k) % p,
            _ => 2 * y % p,
        };
        self.symbols.push(symbol);
        self.positions.push(next);
        self.current_history.push(symbol);
        if is_doubling(symbol) {
            self.close_history();
        }
    }

    fn close_history(&mut self) {
        let p = self.params.p();
        let k = self.params.k;
        let b = self.current_history.iter().fold(0u64, |acc, &s| match s {
            1..=3 => (acc + 1) % p,
            4..=6 => (acc + k) % p,
            _ => acc,
        });
        let class = classify_history(&self.current_history).expect("history closes on a doubling");
        self.current_history.clear();
        let end_step = self.steps();
        self.histories.push(HistoryRecord { b, end_step, class });

        let m = self.params.m as u64;
        let j = (self.histories.len() as u64 - 1) % self.params.s();
        let block = (j % m) as usize;
        if self.pending_c[block].is_none() {
            self.pending_c[block] = class.bit();
        }
        if j + 1 == self.params.s() {
            let c = std::mem::replace(&mut self.pending_c, vec![None; m as usize]);
            let outcome = if c.iter().any(Option::is_none) {
                RoundOutcome::Undefined
            } else if c.iter().all(|&b| b == Some(1)) {
                RoundOutcome::AllOnes
            } else {
                self.stop = Some(end_step);
                RoundOutcome::Stopped
            };
            self.super_rounds.push(SuperRound { c, end_step, outcome });
        }
    }
}

/// Simulates until the stopping time, drawing symbols from `rng`.
pub fn sst_run_with<R: Rng>(params: SstParams, rng: &mut R, max_steps: u64) -> Result<SstTrace, SstError> {
    let mut trace = SstTrace::new(params);
    while trace.stop.is_none() {
        if trace.steps() >= max_steps {
            return Err(SstError::BudgetExceeded { max_steps, trace: Box::new(trace) });
        }
        trace.push(rng.random_range(1..=9u8));
    }
    Ok(trace)
}

/// Trial `trial` of the experiment seeded by `seed`.
pub fn sst_run(params: SstParams, seed: u64, trial: u64, max_steps: u64) -> Result<SstTrace, SstError> {
    sst_run_with(params, &mut rng::stream(seed, Domain::Sst, trial), max_steps)
}

/// Positions, ground covered, and doubling times recomputed from the symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub positions: Vec<u64>,
    pub b: Vec<u64>,
    pub doubling_steps: Vec<u64>,
}

/// Replays a symbol sequence from `Y_0 = y0`.
pub fn replay_symbols(params: &SstParams, symbols: &[u8], y0: u64) -> Replay {
    let p = params.p();
    let mut positions = vec![y0 % p];
    let mut b = Vec::new();
    let mut doubling_steps = Vec::new();
    let mut block_start = y0 % p;
    for (t, &s) in symbols.iter().enumerate() {
        let y = *positions.last().unwrap();
        if is_doubling(s) {
            // b_i = Y_{T_i − 1} − Y_{T_{i−1}}
            b.push((y + p - block_start) % p);
            doubling_steps.push(t as u64 + 1);
            positions.push(2 * y % p);
            block_start = 2 * y % p;
        } else if s <= 3 {
            positions.push((y + 1) % p);
        } else {
            positions.push((y + params.k) % p);
        }
    }
    Replay { positions, b, doubling_steps }
}

/// Monte Carlo estimate of `Pr[T > t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: u64,
    pub trials: u64,
    pub exceed: u64,
    pub estimate: f64,
    /// 99% Wilson interval.
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
}

/// 99% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z_99 / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Tail estimate at `t` from a sample of stopping times.
pub fn tail_estimate(stopping_times: &[u64], t: u64) -> TailEstimate {
    let trials = stopping_times.len() as u64;
    let exceed = stopping_times.iter().filter(|&&s| s > t).count() as u64;
    let (lower, upper) = wilson_interval(exceed, trials);
    TailEstimate {
        t,
        trials,
        exceed,
        estimate: exceed as f64 / trials as f64,
        lower,
        upper,
        half_width: (upper - lower) / 2.0,
    }
}

/// Default per-trial step budget for the Monte Carlo harnesses.
pub fn default_step_budget(params: &SstParams) -> u64 {
    1000 * params.s() * 3
}

/// Stopping times of independent trials `0..trials`.
pub fn stopping_times(params: SstParams, trials: u64, seed: u64) -> Result<Vec<u64>, SstError> {
    let budget = default_step_budget(&params);
    (0..trials)
        .into_par_iter()
        .map(|i| sst_run(params, seed, i, budget).map(|tr| tr.stop.expect("run ends at a stop")))
        .collect()
}

/// `Pr[T > t]` with a 99% confidence interval.
pub fn sst_tail(params: SstParams, t: u64, trials: u64, seed: u64) -> Result<TailEstimate, SstError> {
    if trials < 100 {
        return Err(SstError::InvalidParams(format!("trials = {trials} < 100")));
    }
    Ok(tail_estimate(&stopping_times(params, trials, seed)?, t))
}

/// Aggregates over every super-round of independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub trials: u64,
    pub super_rounds: u64,
    /// `C_i` slots left undefined, summed over super-rounds and blocks.
    pub undefined_slots: u64,
    pub defined_slots: u64,
    /// Defined `C_i` equal to 1.
    pub ones: u64,
    pub all_ones_rounds: u64,
    pub stopping_times: Vec<u64>,
    /// `Y_T` per trial.
    pub stop_positions: Vec<u64>,
    /// Number of steps between consecutive doublings, pooled.
    pub doubling_gaps: Vec<u64>,
}

pub fn round_stats(params: SstParams, trials: u64, seed: u64) -> Result<RoundStats, SstError> {
    let budget = default_step_budget(&params);
    let traces: Vec<SstTrace> = (0..trials)
        .into_par_iter()
        .map(|i| sst_run(params, seed, i, budget))
        .collect::<Result<_, _>>()?;
    let mut stats = RoundStats {
        trials,
        super_rounds: 0,
        undefined_slots: 0,
        defined_slots: 0,
        ones: 0,
        all_ones_rounds: 0,
        stopping_times: Vec::with_capacity(trials as usize),
        stop_positions: Vec::with_capacity(trials as usize),
        doubling_gaps: Vec::new(),
    };
    for tr in &traces {
        for round in &tr.super_rounds {
            stats.super_rounds += 1;
            for c in &round.c {
                match c {
                    None => stats.undefined_slots += 1,
                    Some(bit) => {
                        stats.defined_slots += 1;
                        stats.ones += u64::from(*bit);
                    }
                }
            }
            if round.outcome == RoundOutcome::AllOnes {
                stats.all_ones_rounds += 1;
            }
        }
        stats.stopping_times.push(tr.stop.expect("run ends at a stop"));
        stats.stop_positions.push(tr.position_at_stop().expect("run ends at a stop"));
        let mut prev = 0;
        for h in &tr.histories {
            stats.doubling_gaps.push(h.end_step - prev);
            prev = h.end_step;
        }
    }
    Ok(stats)
}

/// Run-length encoding of symbol sequences as `[symbol, run]` pairs.
pub mod rle {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn encode(symbols: &[u8]) -> Vec<(u8, u32)> {
        let mut runs: Vec<(u8, u32)> = Vec::new();
        for &s in symbols {
            match runs.last_mut() {
                Some((last, n)) if *last == s => *n += 1,
                _ => runs.push((s, 1)),
            }
        }
        runs
    }

    pub fn decode(runs: &[(u8, u32)]) -> Vec<u8> {
        runs.iter().flat_map(|&(s, n)| std::iter::repeat_n(s, n as usize)).collect()
    }

    pub fn serialize<S: Serializer>(symbols: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        encode(symbols).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        Ok(decode(&Vec::<(u8, u32)>::deserialize(de)?))
    }
}
