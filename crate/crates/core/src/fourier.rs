//! Fourier analysis of the block walk `X_s = 2^{s−1} b_1 + … + b_s` on `Z_p`.
//!
//! Transforms use `f̂(ℓ) = Σ_j ω^{ℓj} f(j)` with `ω = e^{2πi/p}`, computed
//! naively in `O(p²)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixing::{self, block_increment_law, increment_ratio, ProbVector};
use crate::modmath::{mod_pow, OddModulus};

/// Largest `p` for which exact L2 distances and transforms are computed.
pub const MAX_FOURIER_MODULUS: u64 = 1023;

pub const PLANCHEREL_TOLERANCE: f64 = 1e-9;
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FourierError {
    #[error("TooLargeForExact: p = {p} exceeds {limit}")]
    TooLargeForExact { p: u64, limit: u64 },
    #[error("PlancherelMismatch: direct {direct} vs spectral {spectral}")]
    PlancherelMismatch { direct: f64, spectral: f64 },
    #[error("ClosedFormMismatch: {0}")]
    ClosedFormMismatch(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}

impl FourierError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TooLargeForExact { .. } => "TooLargeForExact",
            Self::PlancherelMismatch { .. } => "PlancherelMismatch",
            Self::ClosedFormMismatch(_) => "ClosedFormMismatch",
            Self::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

/// `1 − (4 − √10)/9`: bound on `|μ̂|` at frequencies with non-positive cosine.
pub fn xi() -> f64 {
    1.0 - (4.0 - 10f64.sqrt()) / 9.0
}

/// A cycle together with the `m` satisfying `2^{m−1} < p < 2^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierContext {
    pub p: OddModulus,
    pub m: u32,
}

impl FourierContext {
    pub fn new(p: OddModulus) -> Self {
        // odd p ≥ 3 is never a power of two, so the sandwich is strict
        Self { p, m: p.ceil_log2() }
    }

    /// `ω^e`.
    pub fn omega_pow(&self, e: u64) -> Complex64 {
        let angle = 2.0 * std::f64::consts::PI * (e % self.p.get()) as f64 / self.p.get() as f64;
        Complex64::from_polar(1.0, angle)
    }

    /// `σ_r(ℓ) = 2^{rm}·ℓ mod p`.
    pub fn sigma(&self, r: u64, ell: u64) -> u64 {
        let p = self.p.get();
        crate::modmath::mod_mul(mod_pow(2, r * self.m as u64, p), ell % p, p)
    }
}

/// `2·((1 + ξ^{2⌊s/m⌋})^{m−1} − 1)`.
pub fn l2_bound(s: u64, m: u32) -> f64 {
    let rounds = (s / m as u64) as i32;
    2.0 * ((1.0 + xi().powi(2 * rounds)).powi(m as i32 - 1) - 1.0)
}

/// Naive discrete Fourier transform.
pub fn dft(v: &[Complex64]) -> Vec<Complex64> {
    let p = v.len();
    let table: Vec<Complex64> = (0..p)
        .map(|e| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * e as f64 / p as f64))
        .collect();
    let out: Vec<Complex64> = (0..p)
        .map(|ell| v.iter().enumerate().map(|(j, &f)| table[ell * j % p] * f).sum())
        .collect();
    debug_assert!(plancherel_residual(v, &out) < PLANCHEREL_TOLERANCE);
    out
}

/// Transform of a real vector.
pub fn dft_real(v: &[f64]) -> Vec<Complex64> {
    dft(&v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
}

/// `|p·Σ|f|² − Σ|f̂|²|`, relative to `Σ|f̂|²` when that exceeds 1.
pub fn plancherel_residual(f: &[Complex64], fhat: &[Complex64]) -> f64 {
    let lhs = f.len() as f64 * mixing::kahan_sum(f.iter().map(|z| z.norm_sqr()));
    let rhs = mixing::kahan_sum(fhat.iter().map(|z| z.norm_sqr()));
    (lhs - rhs).abs() / rhs.max(1.0)
}

/// The L2 distance of the `s`-block law from uniform, both ways, and its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Report {
    pub p: u64,
    pub m: u32,
    pub s: u64,
    /// `p·Σ(ν_s(j) − 1/p)²`.
    pub exact_l2: f64,
    /// `Σ_{ℓ≠0} |ν̂_s(ℓ)|²`.
    pub spectral_l2: f64,
    pub plancherel_residual: f64,
    pub l2_bound: f64,
}

/// Law of `X_s` from `X_0 = 0` under the `k = p − 1` increment law.
pub fn block_law(p: OddModulus, s: u64) -> ProbVector {
    let mu = block_increment_law(p);
    let mut law = ProbVector::point_mass(p, 0);
    for _ in 0..s {
        law = mixing::pushforward_block(&law, &mu).expect("lengths agree");
    }
    law
}

fn check_size(p: OddModulus) -> Result<(), FourierError> {
    if p.get() > MAX_FOURIER_MODULUS {
        return Err(FourierError::TooLargeForExact { p: p.get(), limit: MAX_FOURIER_MODULUS });
    }
    Ok(())
}

pub fn exact_l2(p: OddModulus, s: u64) -> Result<L2Report, FourierError> {
    check_size(p)?;
    let law = block_law(p, s);
    let u = 1.0 / p.get() as f64;
    let exact = p.get() as f64 * mixing::kahan_sum(law.as_slice().iter().map(|&x| (x - u) * (x - u)));
    let hat = dft_real(law.as_slice());
    let spectral = mixing::kahan_sum(hat[1..].iter().map(|z| z.norm_sqr()));
    let residual = (exact - spectral).abs();
    if residual > PLANCHEREL_TOLERANCE * exact.max(1.0) {
        return Err(FourierError::PlancherelMismatch { direct: exact, spectral });
    }
    let ctx = FourierContext::new(p);
    Ok(L2Report {
        p: p.get(),
        m: ctx.m,
        s,
        exact_l2: exact,
        spectral_l2: spectral,
        plancherel_residual: residual,
        l2_bound: l2_bound(s, ctx.m),
    })
}

/// One row of the bound-vs-exact table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Row {
    pub p: u64,
    pub m: u32,
    pub s: u64,
    pub exact_l2: f64,
    pub l2_bound: f64,
    /// Separation of the `2s`-block law.
    pub sep_exact: f64,
}

pub fn l2_table(p: OddModulus, blocks: &[u64]) -> Result<Vec<L2Row>, FourierError> {
    blocks
        .iter()
        .map(|&s| {
            let rep = exact_l2(p, s)?;
            Ok(L2Row {
                p: rep.p,
                m: rep.m,
                s,
                exact_l2: rep.exact_l2,
                l2_bound: rep.l2_bound,
                sep_exact: mixing::distances(&block_law(p, 2 * s)).sep,
            })
        })
        .collect()
}

/// Whether `cos(2π·r/p) ≤ 0`, decided exactly: `p/4 ≤ r ≤ 3p/4`.
#[inline]
fn cos_nonpositive(r: u64, p: u64) -> bool {
    4 * r >= p && 4 * r <= 3 * p
}

/// Number of `j ∈ [0, s)` with `cos(2π·ℓ·2^j/p) ≤ 0`.
pub fn phi_s(ell: u64, s: u64, ctx: &FourierContext) -> u64 {
    let p = ctx.p.get();
    let mut r = ell % p;
    let mut count = 0;
    for _ in 0..s {
        count += u64::from(cos_nonpositive(r, p));
        r = 2 * r % p;
    }
    count
}

/// First `count` binary digits of `ℓ/p` (the expansion with infinitely many zeros).
pub fn binary_digits(ell: u64, p: OddModulus, count: usize) -> Vec<u8> {
    let p = p.get();
    let mut r = ell % p;
    (0..count)
        .map(|_| {
            r *= 2;
            if r >= p {
                r -= p;
                1
            } else {
                0
            }
        })
        .collect()
}

/// Number of adjacent unequal pairs.
pub fn alternations(bits: &[u8]) -> u64 {
    bits.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternationBound {
    /// `Σ_{r<⌊s/m⌋} |α(σ_r(ℓ))|_A` over the length-`m` windows.
    pub windowed: u64,
    /// Alternations among digits `1..=s+1` of `ℓ/p`.
    pub single_window: u64,
}

/// Lower bounds on [`phi_s`] from the binary expansion of `ℓ/p`.
pub fn alternation_lower(ell: u64, s: u64, ctx: &FourierContext) -> AlternationBound {
    let m = ctx.m as usize;
    let windowed = (0..s / ctx.m as u64)
        .map(|r| alternations(&binary_digits(ctx.sigma(r, ell), ctx.p, m)))
        .sum();
    AlternationBound {
        windowed,
        single_window: alternations(&binary_digits(ell, ctx.p, s as usize + 1)),
    }
}

/// `H(z)`: how many length-`m` bit strings have exactly `z` alternations.
pub fn alternation_census(m: u32) -> Vec<u64> {
    assert!((1..=24).contains(&m), "census enumerates 2^m strings");
    let mut counts = vec![0u64; m as usize];
    for word in 0u64..1 << m {
        // adjacent unequal bits are the set bits of word ^ (word >> 1) below bit m−1
        let z = ((word ^ (word >> 1)) & ((1 << (m - 1)) - 1)).count_ones();
        counts[z as usize] += 1;
    }
    counts
}

/// `G(x) = Σ_k a_k e^{2πikx}` in closed form.
pub fn g_transform(x: f64) -> f64 {
    let q = increment_ratio();
    let q2 = q * q;
    (1.0 - q2) / (5f64.sqrt() * (1.0 + q2 - (3.0 - 5f64.sqrt()) * (2.0 * std::f64::consts::PI * x).cos()))
}

fn mersenne(t: u32) -> Result<OddModulus, FourierError> {
    if !(2..=20).contains(&t) {
        return Err(FourierError::InvalidArgument(format!("t = {t} not in [2, 20]")));
    }
    Ok(OddModulus::new((1u64 << t) - 1).expect("2^t - 1 is odd"))
}

/// `Π_j = Π_{α<t} G(2^α(2^j − 1)/p)` for `p = 2^t − 1`.
pub fn pi_product(j: u32, t: u32) -> Result<f64, FourierError> {
    let p = mersenne(t)?.get();
    if j >= t {
        return Err(FourierError::InvalidArgument(format!("j = {j} not in [0, {t})")));
    }
    let base = (1u64 << j) - 1;
    Ok((0..t)
        .map(|alpha| g_transform(((base << alpha) % p) as f64 / p as f64))
        .product())
}

/// `f(j) = Σ_{a<t} ω^{j·2^a}`.
pub fn separating_function(j: u64, t: u32) -> Complex64 {
    let p = (1u64 << t) - 1;
    let ctx = FourierContext { p: OddModulus::new(p).expect("odd"), m: t };
    (0..t).map(|a| ctx.omega_pow(j * (1 << a) % p)).sum()
}

/// `E(f)` and `E(f·f̄)` under `law`.
pub fn separating_moments(law: &ProbVector, t: u32) -> (Complex64, f64) {
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    for (j, &w) in law.as_slice().iter().enumerate() {
        let f = separating_function(j as u64, t);
        mean += f * w;
        second += f.norm_sqr() * w;
    }
    (mean, second)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatingStats {
    pub t: u32,
    pub r: u32,
    /// Direct `E(f)` under the `r·t`-block law.
    pub mean: Complex64,
    pub second_moment: f64,
    pub variance: f64,
    /// `t·Π_1^r`.
    pub closed_mean: f64,
    /// `t·Σ_j Π_j^r`.
    pub closed_second_moment: f64,
}

/// Moments of the separating function after `r·t` blocks, direct and closed form.
pub fn separating_stats(t: u32, r: u32) -> Result<SeparatingStats, FourierError> {
    let p = mersenne(t)?;
    check_size(p)?;
    let law = block_law(p, r as u64 * t as u64);
    let (mean, second) = separating_moments(&law, t);
    let pis: Vec<f64> = (0..t).map(|j| pi_product(j, t)).collect::<Result<_, _>>()?;
    let closed_mean = t as f64 * pis[1].powi(r as i32);
    let closed_second = t as f64 * pis.iter().map(|x| x.powi(r as i32)).sum::<f64>();
    let mismatch = (mean - Complex64::new(closed_mean, 0.0)).norm().max((second - closed_second).abs());
    if mismatch > CLOSED_FORM_TOLERANCE {
        return Err(FourierError::ClosedFormMismatch(format!(
            "mean {mean} vs {closed_mean}, second {second} vs {closed_second}"
        )));
    }
    Ok(SeparatingStats {
        t,
        r,
        mean,
        second_moment: second,
        variance: second - mean.norm_sqr(),
        closed_mean,
        closed_second_moment: closed_second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::increment_weight;
    use proptest::prelude::*;

    fn odd(p: u64) -> OddModulus {
        OddModulus::new(p).unwrap()
    }

    #[test]
    fn xi_range() {
        assert!(xi() > 0.9069 && xi() < 0.9070);
    }

    #[test]
    fn context_m_sandwich() {
        for p in [3u64, 7, 11, 31, 101, 127, 1023] {
            let ctx = FourierContext::new(odd(p));
            assert!(1u64 << (ctx.m - 1) < p && p < 1u64 << ctx.m);
        }
    }

    #[test]
    fn l2_bound_examples() {
        assert!((l2_bound(10, 5) - 13.800).abs() < 1e-3, "{}", l2_bound(10, 5));
        assert!((l2_bound(4, 2) - 2.0 * xi().powi(4)).abs() < 1e-15);
        assert!((l2_bound(4, 2) - 1.3530).abs() < 1e-4);
        assert!(l2_bound(10_000, 5) < 1e-12);
    }

    #[test]
    fn dft_examples() {
        let p = odd(7);
        let u = dft_real(ProbVector::uniform(p).as_slice());
        assert!((u[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(u[1..].iter().all(|z| z.norm() < 1e-15));
        let delta = dft_real(ProbVector::point_mass(p, 0).as_slice());
        assert!(delta.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    proptest! {
        #[test]
        fn plancherel_holds(values in proptest::collection::vec(-10.0f64..10.0, 3..200)) {
            let f: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            prop_assert!(plancherel_residual(&f, &dft(&f)) < 1e-9);
        }

        #[test]
        fn plancherel_holds_complex(re in proptest::collection::vec(-1.0f64..1.0, 64), im in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let f: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            prop_assert!(plancherel_residual(&f, &dft(&f)) < 1e-9);
        }
    }

    #[test]
    fn exact_l2_examples() {
        for p in [7u64, 31, 127] {
            let r = exact_l2(odd(p), 0).unwrap();
            assert!((r.exact_l2 - (p as f64 - 1.0)).abs() < 1e-9);
        }
        let r = exact_l2(odd(31), 10).unwrap();
        assert!(r.exact_l2 <= l2_bound(10, 5));
        let r = exact_l2(odd(7), 6).unwrap();
        assert!(r.exact_l2 <= l2_bound(6, 3));
        assert!(exact_l2(odd(1025), 1).is_err());
    }

    const L2_P31_S5: f64 = 0.011_167_346_530_181;
    const L2_P127_S14: f64 = 1.904_891_874_118_32e-5;
    const SEP_MEAN_T5_R3: f64 = 1.786_117_595_593_62e-4;
    const SEP_SECOND_T5_R3: f64 = 5.000_358_745_518_74;

    #[test]
    fn frozen_values() {
        assert!((exact_l2(odd(31), 5).unwrap().exact_l2 - L2_P31_S5).abs() < 1e-12);
        assert!((exact_l2(odd(127), 14).unwrap().exact_l2 - L2_P127_S14).abs() < 1e-14);
        let s = separating_stats(5, 3).unwrap();
        assert!((s.mean.re - SEP_MEAN_T5_R3).abs() < 1e-12);
        assert!((s.second_moment - SEP_SECOND_T5_R3).abs() < 1e-12);
    }

    #[test]
    fn phi_s_examples() {
        let ctx = FourierContext::new(odd(7));
        assert_eq!(phi_s(1, 3, &ctx), 2);
        assert_eq!(phi_s(6, 1, &ctx), 0);
    }

    #[test]
    fn phi_s_matches_cosine_definition() {
        for p in [7u64, 11, 31, 101] {
            let ctx = FourierContext::new(odd(p));
            for ell in 1..p {
                let by_cos = (0..20u32)
                    .filter(|&j| {
                        let r = mod_pow(2, j as u64, p) * ell % p;
                        (2.0 * std::f64::consts::PI * r as f64 / p as f64).cos() <= 0.0
                    })
                    .count() as u64;
                assert_eq!(phi_s(ell, 20, &ctx), by_cos);
            }
        }
    }

    #[test]
    fn phi_s_counts_an_orbit_segment() {
        // φ_{s+1}(ℓ) = [cos(2πℓ/p) ≤ 0] + φ_s(2ℓ)
        let ctx = FourierContext::new(odd(31));
        for ell in 1..31 {
            for s in 0..15 {
                let head = phi_s(ell, 1, &ctx);
                assert_eq!(phi_s(ell, s + 1, &ctx), head + phi_s(2 * ell % 31, s, &ctx));
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let ctx = FourierContext::new(odd(11));
        assert_eq!(ctx.m, 4);
        assert_eq!(ctx.sigma(1, 3), 4);
        for ell in 1..11 {
            assert_eq!(ctx.sigma(0, ell), ell);
        }
        // σ_r is a permutation of 1..p−1 and its digits are the shifted window
        for r in 0..4 {
            let mut image: Vec<u64> = (1..11).map(|l| ctx.sigma(r, l)).collect();
            image.sort_unstable();
            assert_eq!(image, (1..11).collect::<Vec<_>>());
            for ell in 1..11 {
                let full = binary_digits(ell, ctx.p, (r as usize + 1) * 4);
                assert_eq!(
                    binary_digits(ctx.sigma(r, ell), ctx.p, 4),
                    full[r as usize * 4..].to_vec()
                );
            }
        }
    }

    #[test]
    fn binary_digits_match_float_expansion() {
        for p in [7u64, 11, 31] {
            for ell in 1..p {
                let digits = binary_digits(ell, odd(p), 20);
                let value: f64 = digits.iter().enumerate().map(|(i, &d)| d as f64 / 2f64.powi(i as i32 + 1)).sum();
                assert!((value - ell as f64 / p as f64).abs() < 2f64.powi(-20));
            }
        }
    }

    #[test]
    fn phi_s_dominates_alternations() {
        for p in [7u64, 11, 31, 101] {
            let ctx = FourierContext::new(odd(p));
            for s in [ctx.m as u64, 2 * ctx.m as u64, 3 * ctx.m as u64] {
                for ell in 1..p {
                    let phi = phi_s(ell, s, &ctx);
                    let lower = alternation_lower(ell, s, &ctx);
                    assert!(phi >= lower.single_window, "p={p} s={s} ell={ell}");
                    assert!(phi >= lower.windowed, "p={p} s={s} ell={ell}");
                    assert!(lower.windowed >= (s / ctx.m as u64));
                }
            }
        }
    }

    #[test]
    fn census_matches_binomial() {
        fn binom(n: u64, k: u64) -> u64 {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        for m in 1..=12u32 {
            let h = alternation_census(m);
            assert_eq!(h.iter().sum::<u64>(), 1 << m);
            assert_eq!(h[0], 2);
            for (z, &count) in h.iter().enumerate() {
                assert_eq!(count, 2 * binom(m as u64 - 1, z as u64));
            }
        }
        assert_eq!(alternation_census(5)[2], 12);
    }

    #[test]
    fn g_transform_values() {
        assert!((g_transform(0.0) - 1.0).abs() < 1e-12);
        assert!((g_transform(0.5) - 0.2).abs() < 1e-12);
        for i in 0..100 {
            let x = i as f64 / 100.0;
            let series: f64 = increment_weight(0)
                + 2.0
                    * (1..=60)
                        .map(|k| increment_weight(k) * (2.0 * std::f64::consts::PI * k as f64 * x).cos())
                        .sum::<f64>();
            assert!((g_transform(x) - series).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn increment_transform_bounded_by_xi() {
        for p in [7u64, 31] {
            let mu = block_increment_law(odd(p));
            assert!(mu[0] >= 1.0 / 3.0 && mu[1] >= 1.0 / 9.0);
            let hat = dft_real(mu.as_slice());
            for ell in 1..p {
                for j in 0..20 {
                    let f = mod_pow(2, j, p) * ell % p;
                    if cos_nonpositive(f, p) {
                        assert!(hat[f as usize].norm() <= xi(), "p={p} f={f}");
                    }
                }
            }
        }
    }

    #[test]
    fn pi_product_values() {
        assert!((pi_product(0, 3).unwrap() - 1.0).abs() < 1e-15);
        let direct = g_transform(1.0 / 7.0) * g_transform(2.0 / 7.0) * g_transform(4.0 / 7.0);
        assert!((pi_product(1, 3).unwrap() - direct).abs() < 1e-15);
        let law = dft_real(block_law(odd(7), 3).as_slice());
        for j in 0..3u32 {
            let freq = (1usize << j) - 1;
            assert!((law[freq].re - pi_product(j, 3).unwrap()).abs() < 1e-6);
            assert!(law[freq].im.abs() < 1e-6);
        }
        for t in 2..=8 {
            for j in 0..t {
                assert!(pi_product(j, t).unwrap().abs() <= 1.0 + 1e-12);
            }
        }
        assert!(pi_product(3, 3).is_err());
    }

    #[test]
    fn separating_function_values() {
        assert_eq!(separating_function(0, 3), Complex64::new(3.0, 0.0));
        for t in [3u32, 5] {
            let p = (1u64 << t) - 1;
            let (mean, second) = separating_moments(&ProbVector::uniform(odd(p)), t);
            assert!(mean.norm() < 1e-12);
            assert!((second - t as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn separating_stats_agree() {
        let s = separating_stats(3, 2).unwrap();
        assert!((s.mean.re - s.closed_mean).abs() < 1e-6);
        assert!((s.second_moment - s.closed_second_moment).abs() < 1e-6);
        assert!((s.variance - (s.second_moment - s.mean.norm_sqr())).abs() < 1e-15);
        for (t, r) in [(4u32, 1u32), (5, 3), (7, 2)] {
            assert!(separating_stats(t, r).is_ok());
        }
    }
}
