use rho_lab_core::fourier::{self, FourierContext, FourierError};
use rho_lab_core::mixing::{self, MixingError};
use rho_lab_core::modmath::{GroupError, GroupInstance, ModMathError, OddModulus};
use rho_lab_core::solver::{self, SolverError};
use rho_lab_core::spectral::{self, GapMode, SpectralError, WalkKind};
use rho_lab_core::sst::{self, SstBudget, SstError, SstParams};
use rho_lab_core::walk::{WalkError, WalkParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{CollideArgs, Command, FourierArgs, MixArgs, SolveArgs, SpectralArgs, SstArgs};
use crate::table::{pairs, Table};

/// An operation failure. The message leads with the error's name.
#[derive(Debug)]
pub struct OpError {
    pub message: String,
}

impl std::fmt::Display for OpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

macro_rules! op_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for OpError {
            fn from(e: $t) -> Self {
                let message = e.to_string();
                debug_assert!(message.starts_with(e.name()));
                Self { message }
            }
        }
    )*};
}

op_error_from!(ModMathError, GroupError, WalkError, MixingError, SolverError, SpectralError, SstError, FourierError);

/// What a command produced: the recorded outputs and what goes to stdout.
pub struct Outcome {
    pub outputs: Value,
    /// Printed above the table in text mode.
    pub summary: Vec<String>,
    pub table: Table,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("outputs serialize")
}

fn walk_params(p: u64, k: Option<u64>) -> Result<WalkParams, OpError> {
    let p = OddModulus::new(p)?;
    Ok(WalkParams::new(p, k.unwrap_or(p.get() - 1))?)
}

pub fn execute(cmd: &Command, seed: u64) -> Result<Outcome, OpError> {
    match cmd {
        Command::Solve(a) => solve(a, seed),
        Command::Collide(a) => collide(a, seed),
        Command::Mix(a) => mix(a),
        Command::Spectral(a) => spectral(a),
        Command::Sst(a) => sst(a, seed),
        Command::Fourier(a) => fourier(a),
    }
}

fn solve(a: &SolveArgs, seed: u64) -> Result<Outcome, OpError> {
    let inst = GroupInstance { q: a.q, p: a.p, x: a.x, y: a.y };
    let out = solver::solve_with_mode(&inst, seed, a.max_attempts, a.partition.into())?;
    Ok(Outcome {
        outputs: to_value(&out),
        summary: vec![format!("k = {}", out.k)],
        table: pairs([
            ("k", out.k.to_string()),
            ("attempts", out.attempts.to_string()),
            ("degenerate_collisions", out.degenerate_collisions.to_string()),
            ("steps", out.steps.to_string()),
        ]),
    })
}

fn quantile(sorted: &[u64], q: f64) -> u64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

fn collide(a: &CollideArgs, seed: u64) -> Result<Outcome, OpError> {
    let params = walk_params(a.p, a.k)?;
    let stats = solver::collision_experiment(&params, a.c, a.trials, seed)?;
    let mut steps = stats.steps_to_collision.clone();
    steps.sort_unstable();
    let mean = steps.iter().sum::<u64>() as f64 / steps.len() as f64;
    let mut outputs = json!({
        "p": stats.p,
        "k": stats.k,
        "c": stats.c,
        "trials": stats.trials,
        "tau_half": stats.tau_half,
        "bound_used": stats.bound_used,
        "fraction_within_bound": stats.fraction_within_bound,
        "guaranteed": stats.guaranteed,
        "sigma": stats.sigma,
        "holds": stats.holds,
        "mean_steps": mean,
        "median_steps": quantile(&steps, 0.5),
        "max_steps": steps[steps.len() - 1],
    });
    let mut table = pairs([
        ("tau_half", stats.tau_half.to_string()),
        ("bound", stats.bound_used.to_string()),
        ("fraction_within_bound", stats.fraction_within_bound.to_string()),
        ("guaranteed", stats.guaranteed.to_string()),
        ("sigma", stats.sigma.to_string()),
        ("holds", stats.holds.to_string()),
        ("median_steps", quantile(&steps, 0.5).to_string()),
    ]);
    if a.block {
        let tau_block = mixing::tau_s_block(params.p(), 0.5, solver::TAU_STEP_BUDGET)?.tau;
        let (t, floor) = solver::block_collision_bound(tau_block, stats.p, a.c);
        outputs["tau_block"] = json!(tau_block);
        outputs["block_bound"] = json!(t);
        outputs["block_floor"] = json!(floor);
        table.push(vec!["tau_block".into(), tau_block.to_string()]);
        table.push(vec!["block_bound".into(), t.to_string()]);
        table.push(vec!["block_floor".into(), floor.to_string()]);
    }
    let summary = vec![format!(
        "{:.4} of {} walks collided within {} steps (guarantee {:.4})",
        stats.fraction_within_bound, stats.trials, stats.bound_used, stats.guaranteed
    )];
    Ok(Outcome { outputs, summary, table })
}

fn mix(a: &MixArgs) -> Result<Outcome, OpError> {
    let report = if a.block {
        mixing::tau_s_block(OddModulus::new(a.p)?, a.eps, a.max_steps)?
    } else {
        mixing::tau_s(&walk_params(a.p, a.k)?, a.eps, a.max_steps)?
    };
    let mut table = Table::new(["t", "sep"]);
    for (t, s) in report.sep_curve.iter().enumerate() {
        table.push(vec![t.to_string(), s.to_string()]);
    }
    Ok(Outcome {
        summary: vec![format!("tau_s = {}", report.tau)],
        outputs: to_value(&report),
        table,
    })
}

fn spectral(a: &SpectralArgs) -> Result<Outcome, OpError> {
    let params = walk_params(a.p, a.k)?;
    let p = params.p();
    let bounds = spectral::gap_bounds(p);
    let mut outputs = json!({ "bounds": to_value(&bounds) });
    let mut rows = vec![
        ("lambda_k_bound", bounds.lambda_k_bound.to_string()),
        ("lambda_r2_bound", bounds.lambda_r2_bound.to_string()),
        ("fill_tau_bound", bounds.fill_tau.to_string()),
    ];
    if let Some(c) = bounds.congestion {
        rows.push(("congestion", c.to_string()));
    }
    if a.exact {
        let k = params.k();
        let gap_k = spectral::exact_gap(WalkKind::K, p, GapMode::Dirichlet)?;
        let gap_r = spectral::exact_gap(WalkKind::R { k }, p, GapMode::Dirichlet)?;
        let gap_r2 = spectral::exact_gap(WalkKind::RSquared { k }, p, GapMode::PpStar)?;
        let fill = 2 * spectral::fill_bound(gap_r2, 1.0 / p.get() as f64, a.eps)?;
        let tau = mixing::tau_s(&params, a.eps, solver::TAU_STEP_BUDGET)?.tau;
        outputs["exact"] = json!({
            "gap_k_dirichlet": gap_k,
            "gap_r_dirichlet": gap_r,
            "gap_r2_pp_star": gap_r2,
            "fill_tau": fill,
            "tau_s": tau,
        });
        rows.extend([
            ("gap_k_dirichlet", gap_k.to_string()),
            ("gap_r_dirichlet", gap_r.to_string()),
            ("gap_r2_pp_star", gap_r2.to_string()),
            ("fill_tau_exact", fill.to_string()),
            ("tau_s", tau.to_string()),
        ]);
    }
    Ok(Outcome { outputs, summary: Vec::new(), table: pairs(rows) })
}

fn sst(a: &SstArgs, seed: u64) -> Result<Outcome, OpError> {
    let probe = SstParams::new(a.m, 1, a.r)?;
    let params = SstParams::new(a.m, a.k.unwrap_or(probe.p() - 1), a.r)?;
    let budget = SstBudget { r: params.r(), steps: 9 * params.m() as u64 * params.r() as u64 };
    let stats = sst::round_stats(params, a.trials, seed)?;
    let t = a.t.unwrap_or(budget.steps);
    let tail = sst::tail_estimate(&stats.stopping_times, t);
    let slots = stats.undefined_slots + stats.defined_slots;
    let undefined_rate = stats.undefined_slots as f64 / slots as f64;
    let predicted = (7.0f64 / 9.0).powi(params.r() as i32);
    let p = params.p();
    let mut counts = vec![0u64; p as usize];
    for &y in &stats.stop_positions {
        counts[y as usize] += 1;
    }
    let tv = counts
        .iter()
        .map(|&c| (c as f64 / a.trials as f64 - 1.0 / p as f64).abs())
        .sum::<f64>()
        / 2.0;
    let mean_t = stats.stopping_times.iter().sum::<u64>() as f64 / a.trials as f64;
    let outputs = json!({
        "p": p,
        "k": params.k(),
        "budget": to_value(&budget),
        "tail": to_value(&tail),
        "super_rounds": stats.super_rounds,
        "undefined_rate": undefined_rate,
        "undefined_predicted": predicted,
        "all_ones_rounds": stats.all_ones_rounds,
        "mean_stopping_time": mean_t,
        "stop_position_tv": tv,
    });
    let table = pairs([
        ("p", p.to_string()),
        ("r", budget.r.to_string()),
        ("budget_steps", budget.steps.to_string()),
        ("t", t.to_string()),
        ("pr_T_gt_t", tail.estimate.to_string()),
        ("wilson_lower", tail.lower.to_string()),
        ("wilson_upper", tail.upper.to_string()),
        ("undefined_rate", undefined_rate.to_string()),
        ("undefined_predicted", predicted.to_string()),
        ("mean_stopping_time", mean_t.to_string()),
        ("stop_position_tv", tv.to_string()),
    ]);
    Ok(Outcome { outputs, summary: Vec::new(), table })
}

fn fourier(a: &FourierArgs) -> Result<Outcome, OpError> {
    let p = OddModulus::new(a.p)?;
    let ctx = FourierContext::new(p);
    let blocks: Vec<u64> = if a.s.is_empty() {
        (1..=5).map(|i| i * ctx.m as u64).collect()
    } else {
        a.s.clone()
    };
    let rows = fourier::l2_table(p, &blocks)?;
    let mut table = Table::new(["p", "m", "s", "exact_l2", "l2_bound", "sep_exact"]);
    for r in &rows {
        table.push(vec![
            r.p.to_string(),
            r.m.to_string(),
            r.s.to_string(),
            r.exact_l2.to_string(),
            r.l2_bound.to_string(),
            r.sep_exact.to_string(),
        ]);
    }
    let mut outputs = json!({ "m": ctx.m, "xi": fourier::xi(), "rows": to_value(&rows) });
    let mut summary = Vec::new();
    if (a.p + 1).is_power_of_two() {
        let t = ctx.m;
        let pis: Vec<f64> = (0..t).map(|j| fourier::pi_product(j, t)).collect::<Result<_, _>>()?;
        let stats = fourier::separating_stats(t, a.r)?;
        summary.push(format!(
            "separating function after {} blocks: mean {:.6e}, second moment {:.6}",
            a.r * t,
            stats.mean.re,
            stats.second_moment
        ));
        outputs["pi_products"] = to_value(&pis);
        outputs["separating"] = to_value(&stats);
    }
    Ok(Outcome { outputs, summary, table })
}
