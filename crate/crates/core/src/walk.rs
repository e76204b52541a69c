//! The three walks everything else is built on.
//!
//! * the iterating function on group elements, carrying the exponent pair
//!   `(a, b)` with `g = x^a · y^b`;
//! * the idealized exponent walk `R` on `Z_p`: `i → i+1`, `i → i+k`, `i → 2i`;
//! * the comparison walk `K` on `Z_p`: `i → 2i`, `i → 2i−1`.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modmath::{mod_mul, GroupInstance, OddModulus};
use crate::rng::{self, splitmix64_finalize, Domain, StreamRng};

/// Move types. `Increment` is Type 1 (`+1`, multiply by `x`), `AddTarget` is
/// Type 2 (`+k`, multiply by `y`), `Double` is Type 3 (`×2`, square).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveType {
    Increment = 1,
    AddTarget = 2,
    Double = 3,
}

impl MoveType {
    pub const ALL: [MoveType; 3] = [MoveType::Increment, MoveType::AddTarget, MoveType::Double];

    /// Maps a type number in `{1, 2, 3}`.
    pub fn from_type(t: u8) -> Option<Self> {
        match t {
            1 => Some(Self::Increment),
            2 => Some(Self::AddTarget),
            3 => Some(Self::Double),
            _ => None,
        }
    }

    pub fn type_number(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("InvalidExponent: k = {k} not in [1, {p})")]
    InvalidExponent { k: u64, p: u64 },
}

impl WalkError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidExponent { .. } => "InvalidExponent",
        }
    }
}

/// An instance of the exponent walk `R` on `Z_p` with target exponent `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkParams {
    p: OddModulus,
    k: u64,
}

impl WalkParams {
    pub fn new(p: OddModulus, k: u64) -> Result<Self, WalkError> {
        if k == 0 || k >= p.get() {
            return Err(WalkError::InvalidExponent { k, p: p.get() });
        }
        Ok(Self { p, k })
    }

    pub fn p(&self) -> OddModulus {
        self.p
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

/// Coefficients of an element `x^a · y^b`, both reduced mod `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentTag {
    pub a: u64,
    pub b: u64,
}

impl ExponentTag {
    pub fn new(a: u64, b: u64) -> Self {
        Self { a, b }
    }

    pub fn apply(self, mv: MoveType, p: u64) -> Self {
        match mv {
            MoveType::Increment => Self { a: (self.a + 1) % p, b: self.b },
            MoveType::AddTarget => Self { a: self.a, b: (self.b + 1) % p },
            MoveType::Double => Self { a: 2 * self.a % p, b: 2 * self.b % p },
        }
    }
}

/// A tagged position of the exponent walk; `position ≡ a + k·b (mod p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentState {
    pub tag: ExponentTag,
    pub position: u64,
}

impl ExponentState {
    pub fn new(a: u64, b: u64, params: &WalkParams) -> Self {
        let p = params.p.get();
        let (a, b) = (a % p, b % p);
        Self {
            tag: ExponentTag { a, b },
            position: (a + mod_mul(params.k, b, p)) % p,
        }
    }

    pub fn step(self, mv: MoveType, params: &WalkParams) -> Self {
        Self {
            tag: self.tag.apply(mv, params.p.get()),
            position: step_r(self.position, mv, params),
        }
    }

    pub fn is_consistent(&self, params: &WalkParams) -> bool {
        *self == Self::new(self.tag.a, self.tag.b, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionMode {
    /// Deterministic hash of the state; no memory.
    Hashed,
    /// Independent uniform assignment on first visit, memoized afterwards.
    LazyRandom,
}

/// A fixed partition of the state space into the three move types.
///
/// One `LazyRandom` oracle belongs to one walk: its memo is the partition
/// realized so far.
#[derive(Debug, Clone)]
pub struct PartitionOracle {
    seed: u64,
    mode: PartitionMode,
    memo: HashMap<u64, MoveType>,
    rng: Option<StreamRng>,
}

impl PartitionOracle {
    pub fn hashed(seed: u64) -> Self {
        Self { seed, mode: PartitionMode::Hashed, memo: HashMap::new(), rng: None }
    }

    pub fn lazy_random(seed: u64) -> Self {
        Self::lazy_random_stream(seed, Domain::Partition, 0)
    }

    /// A lazily sampled partition drawing from the given stream.
    pub fn lazy_random_stream(seed: u64, domain: Domain, index: u64) -> Self {
        Self {
            seed,
            mode: PartitionMode::LazyRandom,
            memo: HashMap::new(),
            rng: Some(rng::stream(seed, domain, index)),
        }
    }

    pub fn new(seed: u64, mode: PartitionMode) -> Self {
        match mode {
            PartitionMode::Hashed => Self::hashed(seed),
            PartitionMode::LazyRandom => Self::lazy_random(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> PartitionMode {
        self.mode
    }

    /// Number of states assigned so far (always 0 for `Hashed`).
    pub fn assigned(&self) -> usize {
        self.memo.len()
    }

    pub fn assign(&mut self, state: u64) -> MoveType {
        match self.mode {
            PartitionMode::Hashed => {
                let h = splitmix64_finalize(self.seed ^ state);
                MoveType::ALL[(h % 3) as usize]
            }
            PartitionMode::LazyRandom => {
                let rng = self.rng.as_mut().expect("lazy oracle owns a generator");
                *self
                    .memo
                    .entry(state)
                    .or_insert_with(|| MoveType::ALL[rng.random_range(0..3usize)])
            }
        }
    }
}

/// One application of the iterating function to a subgroup element and its tag.
pub fn iterate_f(
    g: u64,
    tag: ExponentTag,
    inst: &GroupInstance,
    oracle: &mut PartitionOracle,
) -> (u64, ExponentTag) {
    let mv = oracle.assign(g);
    let next = match mv {
        MoveType::Increment => mod_mul(g, inst.x, inst.q),
        MoveType::AddTarget => mod_mul(g, inst.y, inst.q),
        MoveType::Double => mod_mul(g, g, inst.q),
    };
    (next, tag.apply(mv, inst.p))
}

/// One move of `R`.
#[inline]
pub fn step_r(i: u64, mv: MoveType, params: &WalkParams) -> u64 {
    let p = params.p.get();
    match mv {
        MoveType::Increment => (i + 1) % p,
        MoveType::AddTarget => (i + params.k) % p,
        MoveType::Double => 2 * i % p,
    }
}

/// One move of `K`: choice 0 is `2i`, choice 1 is `2i − 1`.
#[inline]
pub fn step_k(i: u64, choice: u8, p: OddModulus) -> u64 {
    let p = p.get();
    let doubled = 2 * i % p;
    match choice {
        0 => doubled,
        _ => (doubled + p - 1) % p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::mod_pow;
    use proptest::prelude::*;

    fn params(p: u64, k: u64) -> WalkParams {
        WalkParams::new(OddModulus::new(p).unwrap(), k).unwrap()
    }

    const INST: GroupInstance = GroupInstance { q: 23, p: 11, x: 2, y: 13 };

    /// Oracle that answers `mv` for every state below 64.
    fn forced(mv: MoveType) -> PartitionOracle {
        let mut o = PartitionOracle::lazy_random(0);
        for s in 0..64 {
            o.memo.insert(s, mv);
        }
        o
    }

    #[test]
    fn k_range_enforced() {
        let p = OddModulus::new(11).unwrap();
        assert!(WalkParams::new(p, 0).is_err());
        assert!(WalkParams::new(p, 11).is_err());
        assert!(WalkParams::new(p, 10).is_ok());
    }

    #[test]
    fn step_r_examples() {
        let pr = params(11, 3);
        assert_eq!(step_r(5, MoveType::Increment, &pr), 6);
        assert_eq!(step_r(9, MoveType::AddTarget, &pr), 1);
        assert_eq!(step_r(5, MoveType::Double, &pr), 10);
    }

    #[test]
    fn step_k_examples() {
        let p = OddModulus::new(7).unwrap();
        assert_eq!(step_k(3, 0, p), 6);
        assert_eq!(step_k(3, 1, p), 5);
        assert_eq!(step_k(0, 1, p), 6);
    }

    #[test]
    fn iterate_f_examples() {
        let (g, t) = iterate_f(2, ExponentTag::new(1, 0), &INST, &mut forced(MoveType::Double));
        assert_eq!((g, t), (4, ExponentTag::new(2, 0)));
        let (g, t) = iterate_f(2, ExponentTag::new(1, 0), &INST, &mut forced(MoveType::Increment));
        assert_eq!((g, t), (4, ExponentTag::new(2, 0)));
        let (g, t) = iterate_f(13, ExponentTag::new(0, 1), &INST, &mut forced(MoveType::AddTarget));
        assert_eq!((g, t), (8, ExponentTag::new(0, 2)));
    }

    #[test]
    fn increment_advances_position_by_one() {
        let pr = params(11, 7);
        for a in 0..11 {
            for b in 0..11 {
                let s = ExponentState::new(a, b, &pr);
                let n = s.step(MoveType::Increment, &pr);
                assert_eq!(n.position, (s.position + 1) % 11);
                assert!(n.is_consistent(&pr));
            }
        }
    }

    #[test]
    fn doubling_is_a_permutation() {
        for p in (3..=101).step_by(2) {
            let pr = params(p, 1);
            let mut seen = vec![false; p as usize];
            for i in 0..p {
                seen[step_r(i, MoveType::Double, &pr) as usize] = true;
            }
            assert!(seen.iter().all(|&s| s), "p = {p}");
        }
    }

    #[test]
    fn r_preimages_are_distinct() {
        // Every j has exactly three (state, move) preimages, so R is doubly stochastic.
        for p in (3..=101u64).step_by(2) {
            for k in 1..p {
                let pr = params(p, k);
                let mut indegree = vec![0u32; p as usize];
                for i in 0..p {
                    for mv in MoveType::ALL {
                        indegree[step_r(i, mv, &pr) as usize] += 1;
                    }
                }
                assert!(indegree.iter().all(|&d| d == 3));
            }
        }
    }

    #[test]
    fn partition_is_fixed() {
        let mut lazy = PartitionOracle::lazy_random(99);
        let mut hashed = PartitionOracle::hashed(99);
        for s in [0u64, 5, 17, 1 << 40] {
            let (l, h) = (lazy.assign(s), hashed.assign(s));
            assert_eq!(lazy.assign(s), l);
            assert_eq!(hashed.assign(s), h);
        }
        assert_eq!(lazy.assigned(), 4);
        assert_eq!(hashed.assigned(), 0);
    }

    #[test]
    fn lazy_partition_frequencies() {
        let n = 1_000_000u64;
        let mut o = PartitionOracle::lazy_random(2024);
        let mut counts = [0u64; 3];
        for s in 0..n {
            counts[o.assign(s) as usize - 1] += 1;
        }
        let sigma = (2.0f64 / 9.0 * n as f64).sqrt() / n as f64;
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn hashed_partition_frequencies() {
        let mut o = PartitionOracle::hashed(0);
        let mut counts = [0u64; 3];
        for s in 0..1_000_000u64 {
            counts[o.assign(s) as usize - 1] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e6 - 1.0 / 3.0).abs() < 0.01, "{counts:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn group_walk_tracks_exponents(seed in any::<u64>(), len in 1usize..40) {
            // y = 2^7 mod 23, so g = x^(a + 7b) throughout.
            let k = 7;
            let pr = params(11, k);
            let mut oracle = PartitionOracle::hashed(seed);
            let (mut g, mut tag) = (INST.x, ExponentTag::new(1, 0));
            let mut st = ExponentState::new(1, 0, &pr);
            for _ in 0..len {
                let mv = oracle.assign(g);
                (g, tag) = iterate_f(g, tag, &INST, &mut oracle);
                st = st.step(mv, &pr);
                prop_assert_eq!(st.tag, tag);
                prop_assert!(st.is_consistent(&pr));
                prop_assert_eq!(mod_pow(INST.x, st.position, INST.q), g);
            }
        }
    }
}
