//! Canonical paths for `K`, congestion, the analytic spectral-gap bounds, and a
//! numerical spectral gap for small cycles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modmath::{mod_pow, OddModulus};
use crate::walk::{step_k, step_r, MoveType, WalkParams};

/// Largest `p` for which dense matrices are built.
pub const MAX_DENSE_MODULUS: u64 = 512;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_ITERATION_CAP: u64 = 1_000_000;

/// The constant relating `λ_{R²(R²)*}` to `λ_K`.
pub const COMPARISON_CONSTANT: f64 = 2.0 / 81.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("TooLargeForDense: p = {p} exceeds {limit}")]
    TooLargeForDense { p: u64, limit: u64 },
    #[error("NoConvergence: {cap} iterations, residual {residual:e}")]
    NoConvergence { cap: u64, residual: f64 },
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}

impl SpectralError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TooLargeForDense { .. } => "TooLargeForDense",
            Self::NoConvergence { .. } => "NoConvergence",
            Self::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

/// The canonical path from `x` to `y` along `K`-edges, as `⌈log₂ p⌉` edges.
///
/// With `n = ⌈log₂ p⌉`, the endpoint after bits `c_1…c_n` is
/// `2^n·x − Σ 2^{n−i} c_i (mod p)`. The required residue has one or two
/// representatives below `2^n`; the smaller one is used.
pub fn canonical_path(x: u64, y: u64, p: OddModulus) -> Vec<(u64, u64)> {
    let n = p.ceil_log2();
    let pm = p.get();
    let target = (mod_pow(2, n as u64, pm) * (x % pm) % pm + pm - y % pm) % pm;
    let mut edges = Vec::with_capacity(n as usize);
    let mut cur = x % pm;
    for i in 1..=n {
        let bit = ((target >> (n - i)) & 1) as u8;
        let next = step_k(cur, bit, p);
        edges.push((cur, next));
        cur = next;
    }
    debug_assert_eq!(cur, y % pm);
    edges
}

/// All canonical paths of a cycle, built on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathSystem {
    pub p: OddModulus,
    pub n: u32,
}

impl PathSystem {
    pub fn new(p: OddModulus) -> Self {
        Self { p, n: p.ceil_log2() }
    }

    pub fn path(&self, x: u64, y: u64) -> Vec<(u64, u64)> {
        canonical_path(x, y, self.p)
    }
}

/// Worst-edge congestion of the canonical paths over pairs `x ≠ y`;
/// its reciprocal lower-bounds `λ_K`.
pub fn congestion(p: OddModulus) -> Result<f64, SpectralError> {
    if p.get() > MAX_DENSE_MODULUS {
        return Err(SpectralError::TooLargeForDense { p: p.get(), limit: MAX_DENSE_MODULUS });
    }
    let size = p.size();
    let system = PathSystem::new(p);
    // load[2a + c] counts paths through the edge a → 2a − c
    let mut load = vec![0u64; 2 * size];
    for x in 0..size as u64 {
        for y in 0..size as u64 {
            if x == y {
                continue;
            }
            for (a, b) in system.path(x, y) {
                let c = if b == step_k(a, 0, p) { 0 } else { 1 };
                load[2 * a as usize + c] += 1;
            }
        }
    }
    let max_load = load.iter().copied().max().unwrap_or(0) as f64;
    let n = system.n as f64;
    let pf = p.get() as f64;
    // (count · π(x)π(y)|γ|) / (π(a) K(a, b)) with uniform π and K(a, b) = 1/2
    Ok(max_load * n / (pf * pf) / (0.5 / pf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBounds {
    pub p: u64,
    /// `1/(2⌈log₂ p⌉²)`.
    pub lambda_k_bound: f64,
    /// `(2/81)·lambda_k_bound`.
    pub lambda_r2_bound: f64,
    /// Canonical-path congestion, when `p` is small enough to enumerate.
    pub congestion: Option<f64>,
    /// Fill bound on `τ_s(1/2)` of `R²` from `lambda_r2_bound`, in `R²` steps.
    pub fill_tau_r2: u64,
    /// Twice `fill_tau_r2`: the resulting bound on `τ_s(1/2)` of `R`.
    pub fill_tau: u64,
}

pub fn gap_bounds(p: OddModulus) -> GapBounds {
    let n = p.ceil_log2() as f64;
    let lambda_k_bound = 1.0 / (2.0 * n * n);
    let lambda_r2_bound = COMPARISON_CONSTANT * lambda_k_bound;
    let fill_tau_r2 = fill_bound(lambda_r2_bound, 1.0 / p.get() as f64, 0.5)
        .expect("analytic bound arguments are in range");
    GapBounds {
        p: p.get(),
        lambda_k_bound,
        lambda_r2_bound,
        congestion: congestion(p).ok(),
        fill_tau_r2,
        fill_tau: 2 * fill_tau_r2,
    }
}

/// `⌈(1/λ)·ln(1/(ε·π_min))⌉`, clamped at zero.
pub fn fill_bound(lambda: f64, pi_min: f64, epsilon: f64) -> Result<u64, SpectralError> {
    if !(lambda > 0.0 && lambda <= 1.0) || !(pi_min > 0.0 && pi_min <= 1.0) || !(epsilon > 0.0) {
        return Err(SpectralError::InvalidArgument(format!(
            "lambda = {lambda}, pi_min = {pi_min}, epsilon = {epsilon}"
        )));
    }
    let value = (1.0 / lambda) * (1.0 / (epsilon * pi_min)).ln();
    Ok(value.ceil().max(0.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkKind {
    R { k: u64 },
    K,
    RSquared { k: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapMode {
    /// Gap of the additive symmetrization `(P + Pᵀ)/2`.
    Dirichlet,
    /// Gap of `P·Pᵀ`.
    PpStar,
}

/// Dense row-major `p × p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.data[j * self.n + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &mut out.data[i * n..(i + 1) * n];
            for l in 0..n {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in row.iter_mut().zip(&other.data[l * n..(l + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        out
    }

    fn matvec(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.n)) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

fn dense_size(p: OddModulus) -> Result<usize, SpectralError> {
    if p.get() > MAX_DENSE_MODULUS {
        return Err(SpectralError::TooLargeForDense { p: p.get(), limit: MAX_DENSE_MODULUS });
    }
    Ok(p.size())
}

/// Transition matrix of `R`, `K`, or `R²`.
pub fn transition_matrix(walk: WalkKind, p: OddModulus) -> Result<DenseMatrix, SpectralError> {
    let n = dense_size(p)?;
    let r_matrix = |k: u64| -> Result<DenseMatrix, SpectralError> {
        let params = WalkParams::new(p, k).map_err(|e| SpectralError::InvalidArgument(e.to_string()))?;
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n as u64 {
            for mv in MoveType::ALL {
                m.add(i as usize, step_r(i, mv, &params) as usize, 1.0 / 3.0);
            }
        }
        Ok(m)
    };
    match walk {
        WalkKind::R { k } => r_matrix(k),
        WalkKind::RSquared { k } => {
            let r = r_matrix(k)?;
            Ok(r.matmul(&r))
        }
        WalkKind::K => {
            let mut m = DenseMatrix::zeros(n);
            for i in 0..n as u64 {
                for c in 0..2 {
                    m.add(i as usize, step_k(i, c, p) as usize, 0.5);
                }
            }
            Ok(m)
        }
    }
}

/// Result of a deflated power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    /// Largest eigenvalue on the complement of the all-ones vector.
    pub eigenvalue: f64,
    pub iterations: u64,
    pub residual: f64,
}

/// Largest eigenvalue of a symmetric matrix with nonnegative spectrum, on the
/// subspace orthogonal to the all-ones vector (assumed to be an eigenvector).
pub fn deflated_power_iteration(
    m: &DenseMatrix,
    tolerance: f64,
    cap: u64,
) -> Result<PowerResult, SpectralError> {
    let n = m.n;
    let deflate = |v: &mut [f64]| {
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let normalize = |v: &mut [f64]| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    };
    // fixed, non-symmetric start vector
    let mut v: Vec<f64> = (0..n).map(|i| ((i * 7919 + 13) % 101) as f64 / 101.0 + 0.01 * i as f64).collect();
    deflate(&mut v);
    normalize(&mut v);
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=cap {
        m.matvec(&v, &mut w);
        deflate(&mut w);
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        residual = w.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if residual <= tolerance {
            return Ok(PowerResult { eigenvalue: lambda, iterations: it, residual });
        }
        if w.iter().all(|&x| x == 0.0) {
            return Ok(PowerResult { eigenvalue: 0.0, iterations: it, residual: 0.0 });
        }
        std::mem::swap(&mut v, &mut w);
        normalize(&mut v);
    }
    Err(SpectralError::NoConvergence { cap, residual })
}

/// Numerical spectral gap of a walk. `Dirichlet` gives `1 − λ₂((P+Pᵀ)/2)`,
/// `PpStar` gives `1 − λ₂(P·Pᵀ)`.
pub fn exact_gap(walk: WalkKind, p: OddModulus, mode: GapMode) -> Result<f64, SpectralError> {
    let m = transition_matrix(walk, p)?;
    let mt = m.transpose();
    match mode {
        GapMode::Dirichlet => {
            // (S + I)/2 has spectrum in [0, 1] and the same eigenvectors as S.
            let mut shifted = DenseMatrix::zeros(m.n);
            for i in 0..m.n {
                for j in 0..m.n {
                    shifted.data[i * m.n + j] = 0.25 * (m.get(i, j) + mt.get(i, j));
                }
                shifted.data[i * m.n + i] += 0.5;
            }
            let top = deflated_power_iteration(&shifted, POWER_TOLERANCE, POWER_ITERATION_CAP)?;
            Ok(2.0 * (1.0 - top.eigenvalue))
        }
        GapMode::PpStar => {
            let ppt = m.matmul(&mt);
            let top = deflated_power_iteration(&ppt, POWER_TOLERANCE, POWER_ITERATION_CAP)?;
            Ok(1.0 - top.eigenvalue)
        }
    }
}
