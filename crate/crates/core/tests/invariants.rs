use rho_lab_core::fourier::{self, FourierContext};
use rho_lab_core::mixing::{self, ProbVector};
use rho_lab_core::modmath::OddModulus;
use rho_lab_core::sst::{self, SstParams};
use rho_lab_core::walk::WalkParams;

fn odd(p: u64) -> OddModulus {
    OddModulus::new(p).unwrap()
}

#[test]
fn l2_bound_dominates_exact_l2_and_separation() {
    for p in [7u64, 31, 127] {
        let ctx = FourierContext::new(odd(p));
        let blocks: Vec<u64> = (1..=5).map(|i| i * ctx.m as u64).collect();
        for row in fourier::l2_table(odd(p), &blocks).unwrap() {
            assert!(row.exact_l2 <= row.l2_bound + 1e-9, "{row:?}");
            assert!(row.sep_exact <= row.l2_bound + 1e-9, "{row:?}");
        }
    }
}

#[test]
fn block_budget_reaches_target_separation() {
    for p in [7u64, 31, 127] {
        let m = FourierContext::new(odd(p)).m as f64;
        for eps in [0.5, 0.1, 0.01] {
            let budget = (2.0 * m * (2.0 * (m - 1.0) / eps).ln()).ceil() as u64;
            let law = fourier::block_law(odd(p), budget);
            assert!(mixing::distances(&law).sep <= eps, "p={p} eps={eps}");
        }
    }
}

#[test]
fn block_law_is_translation_covariant() {
    // the law from start x is the law from 0 shifted by 2^s·x
    let p = odd(31);
    let mu = mixing::block_increment_law(p);
    let from_zero = fourier::block_law(p, 4);
    let mut from_five = ProbVector::point_mass(p, 5);
    for _ in 0..4 {
        from_five = mixing::pushforward_block(&from_five, &mu).unwrap();
    }
    let shift = 16 * 5 % 31;
    for j in 0..31 {
        assert!((from_five[(j + shift) % 31] - from_zero[j]).abs() < 1e-15);
    }
}

#[test]
fn stopping_time_tail_dominates_separation() {
    for (m, trials) in [(3u32, 4000u64), (5, 2000)] {
        let params = SstParams::new(m, (1 << m) - 2, None).unwrap();
        let times = sst::stopping_times(params, trials, 11).unwrap();
        let horizon = *times.iter().max().unwrap();
        let walk = WalkParams::new(params.modulus(), params.k()).unwrap();
        let curve = mixing::separation_curve(&walk, horizon).unwrap();
        for (t, &sep) in curve.iter().enumerate() {
            let tail = sst::tail_estimate(&times, t as u64);
            assert!(sep <= tail.estimate + 3.0 * tail.half_width + 1e-12, "m={m} t={t}");
        }
    }
}

#[test]
fn stopped_position_is_uniform() {
    let params = SstParams::new(3, 6, None).unwrap();
    let budget = sst::default_step_budget(&params);
    let mut counts = [0u64; 7];
    let trials = 20_000;
    for trial in 0..trials {
        let trace = sst::sst_run(params, 5, trial, budget).unwrap();
        counts[trace.position_at_stop().unwrap() as usize] += 1;
    }
    let tv: f64 = counts.iter().map(|&c| (c as f64 / trials as f64 - 1.0 / 7.0).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.02, "tv = {tv}");
}
