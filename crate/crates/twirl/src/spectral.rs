//! Spectral gaps, distances, and mixing times of the circuit chains.
//!
//! For a reversible chain the gap is `Δ = min(1 − λ₂, 1 + λ_min)` of the
//! symmetrized transition matrix, and mixing obeys
//! `τ(ε) ≤ (1/Δ) ln(1/(π* ε))`. Irreversible chains are analysed through the
//! multiplicative reversiblization `P P*`, whose gap enters the same bounds
//! with an extra factor of two.

use ndarray as nd;
use ndarray_linalg::{Eigh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chains::{zero_stationary, ChainMatrix, Distribution, Space};
use crate::{Error, Result};

/// Iteration cap for the exact mixing-time search.
pub const MIXING_STEP_CAP: usize = 10_000_000;
/// Detailed-balance residual below which a chain is treated as reversible.
pub const REVERSIBLE_TOL: f64 = 1e-10;
/// Dense eigensolves are refused above this state count.
const DENSE_SOLVE_CAP: usize = 4096;

/// Stationary distribution of a chain: closed form for the zero chain,
/// birth–death ratios for other tridiagonal chains, and power iteration to
/// 1-norm residual 1e-13 (from the uniform start) for full chains.
pub fn stationary(chain: &ChainMatrix) -> Result<Distribution> {
    match chain.space() {
        Space::Zero => zero_stationary(chain.n()),
        Space::Accelerated => birth_death_stationary(chain),
        Space::Full => power_iteration_stationary(chain),
    }
}

fn birth_death_stationary(chain: &ChainMatrix) -> Result<Distribution> {
    let (down, _, up) = chain
        .bands()
        .ok_or_else(|| Error::invalid("birth–death stationary needs a tridiagonal chain"))?;
    let s = chain.states();
    // log-space cumulative ratios π(x+1)/π(x) = up(x)/down(x+1)
    let mut logw = vec![0.0f64; s];
    for x in 0..s - 1 {
        if up[x] <= 0.0 || down[x + 1] <= 0.0 {
            return Err(Error::numeric(
                "birth–death stationary: chain is not irreducible".to_string(),
            ));
        }
        logw[x + 1] = logw[x] + up[x].ln() - down[x + 1].ln();
    }
    let peak = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(Distribution::from_raw(chain.space(), chain.n(), w))
}

fn power_iteration_stationary(chain: &ChainMatrix) -> Result<Distribution> {
    let s = chain.states();
    let mut cur = vec![1.0 / s as f64; s];
    let mut next = vec![0.0f64; s];
    for _ in 0..100_000 {
        chain.apply_left(&cur, &mut next);
        let residual: f64 = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut cur, &mut next);
        if residual < 1e-13 {
            let total: f64 = cur.iter().sum();
            for v in &mut cur {
                *v /= total;
            }
            return Ok(Distribution::from_raw(chain.space(), chain.n(), cur));
        }
    }
    Err(Error::numeric(
        "stationary: power iteration did not reach residual 1e-13 in 100000 steps".to_string(),
    ))
}

/// Largest absolute detailed-balance residual `|π_x P(x,y) − π_y P(y,x)|`.
pub fn detailed_balance_residual(chain: &ChainMatrix, pi: &Distribution) -> f64 {
    let w = pi.weights();
    let mut worst = 0.0f64;
    for (x, y, v) in chain.triplets() {
        let r = (w[x] * v - w[y] * chain.entry(y, x)).abs();
        worst = worst.max(r);
    }
    worst
}

/// Number of eigenvalues of the symmetric tridiagonal matrix `(d, e)`
/// strictly below `x`, by the Sturm sign-change count of the LDLᵀ pivots.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut q = 1.0f64;
    for i in 0..d.len() {
        q = if i == 0 {
            d[0] - x
        } else {
            d[i] - x - e[i - 1] * e[i - 1] / q
        };
        if q.abs() < 1e-280 {
            q = -1e-280;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th ascending (0-based) eigenvalue of a symmetric tridiagonal matrix by
/// Sturm bisection.
fn tridiag_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    let s = d.len();
    debug_assert!(k < s);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..s {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i < s - 1 { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    for _ in 0..300 {
        if hi - lo <= 1e-16 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(λ₂, λ_min)` of the chain after symmetrization with `√π`.
fn symmetrized_extremes(chain: &ChainMatrix, pi: &Distribution) -> Result<(f64, f64)> {
    if let Some((down, stay, up)) = chain.bands() {
        // S(x, x+1) = √(π_x/π_{x+1}) P(x,x+1) = √(up(x)·down(x+1)) under
        // detailed balance — no explicit π needed.
        let s = chain.states();
        let d: Vec<f64> = stay.to_vec();
        let e: Vec<f64> = (0..s - 1).map(|x| (up[x] * down[x + 1]).sqrt()).collect();
        let lam2 = tridiag_eigenvalue(&d, &e, s - 2);
        let lam_min = tridiag_eigenvalue(&d, &e, 0);
        return Ok((lam2, lam_min));
    }
    let s = chain.states();
    if s > DENSE_SOLVE_CAP {
        return Err(Error::invalid(format!(
            "eigen_gap: {s} states exceed the {DENSE_SOLVE_CAP}-state dense solver cap"
        )));
    }
    let p = chain.to_dense()?;
    let w = pi.weights();
    let sqrt_pi: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let mut sym = nd::Array2::zeros((s, s));
    for x in 0..s {
        for y in 0..s {
            sym[[x, y]] = sqrt_pi[x] / sqrt_pi[y] * p[[x, y]];
        }
    }
    let sym = (&sym + &sym.t()) * 0.5;
    let (vals, _) = sym
        .eigh(UPLO::Lower)
        .map_err(|e| Error::numeric(format!("eigen_gap: dense eigensolver failed: {e}")))?;
    Ok((vals[s - 2], vals[0]))
}

/// Spectral gap of a chain and whether it was treated as reversible.
///
/// Reversibility is decided by the numeric detailed-balance residual against
/// the chain's stationary distribution (threshold 1e-10). Reversible chains
/// report `Δ = min(1 − λ₂, 1 + λ_min)`; irreversible chains report the gap
/// `1 − λ₂(PP*)` of the multiplicative reversiblization.
pub fn eigen_gap(chain: &ChainMatrix) -> Result<(f64, bool)> {
    let pi = stationary(chain)?;
    if detailed_balance_residual(chain, &pi) < REVERSIBLE_TOL {
        let (lam2, lam_min) = symmetrized_extremes(chain, &pi)?;
        let gap = (1.0 - lam2).min(1.0 + lam_min).max(0.0);
        Ok((gap, true))
    } else {
        Ok((pp_star_gap_with(chain, &pi)?, false))
    }
}

/// Gap `1 − λ₂(PP*)` of the multiplicative reversiblization, where
/// `P*(x,y) = π(y) P(y,x) / π(x)` is the time reversal.
pub fn pp_star_gap(chain: &ChainMatrix) -> Result<f64> {
    let pi = stationary(chain)?;
    pp_star_gap_with(chain, &pi)
}

fn pp_star_gap_with(chain: &ChainMatrix, pi: &Distribution) -> Result<f64> {
    let s = chain.states();
    if s > DENSE_SOLVE_CAP {
        return Err(Error::invalid(format!(
            "pp_star_gap: {s} states exceed the {DENSE_SOLVE_CAP}-state dense solver cap"
        )));
    }
    let p = chain.to_dense()?;
    let w = pi.weights();
    for (x, &v) in w.iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::numeric(format!(
                "pp_star_gap: stationary weight {v} at state {x} is not positive"
            )));
        }
    }
    let mut rev = nd::Array2::zeros((s, s));
    for x in 0..s {
        for y in 0..s {
            rev[[x, y]] = w[y] * p[[y, x]] / w[x];
        }
    }
    let m = p.dot(&rev);
    // PP* is reversible w.r.t. π: symmetrize and eigensolve.
    let sqrt_pi: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let mut sym = nd::Array2::zeros((s, s));
    for x in 0..s {
        for y in 0..s {
            sym[[x, y]] = sqrt_pi[x] / sqrt_pi[y] * m[[x, y]];
        }
    }
    let sym = (&sym + &sym.t()) * 0.5;
    let (vals, _) = sym
        .eigh(UPLO::Lower)
        .map_err(|e| Error::numeric(format!("pp_star_gap: dense eigensolver failed: {e}")))?;
    Ok((1.0 - vals[s - 2]).max(0.0))
}

/// Total-variation distance `½ Σ |a − b|` between distributions over the
/// same space.
pub fn tv_distance(a: &Distribution, b: &Distribution) -> Result<f64> {
    if a.space() != b.space() || a.n() != b.n() {
        return Err(Error::invalid(format!(
            "tv_distance: spaces {}(n={}) and {}(n={}) do not match",
            a.space().name(),
            a.n(),
            b.space().name(),
            b.n()
        )));
    }
    Ok(0.5 * a.weights().iter().zip(b.weights()).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Measured and bounded mixing behaviour of one chain.
#[derive(Clone, Debug, Serialize)]
pub struct MixingReport {
    /// Spectral gap from [`eigen_gap`].
    pub gap: f64,
    pub reversible: bool,
    /// Worst-start exact mixing time: first `t` with TV ≤ ε.
    pub tau: usize,
    /// Gap-based bound on τ(ε); infinite when the gap vanishes.
    pub tau_bound: f64,
    pub epsilon: f64,
    /// `(t, TV distance)` for the worst start, `t = 0..=tau`.
    pub distance_curve: Vec<(usize, f64)>,
}

/// Exact worst-start mixing time: iterates each start distribution and
/// records the first step whose total-variation distance to stationarity
/// drops to `eps`; the report carries the distance curve of the worst start.
///
/// Fails with a numeric error naming the residual distance when any start
/// has not mixed within [`MIXING_STEP_CAP`] steps.
pub fn mixing_time(chain: &ChainMatrix, eps: f64, starts: &[Distribution]) -> Result<MixingReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("mixing_time: eps = {eps} not in (0, 1)")));
    }
    if starts.is_empty() {
        return Err(Error::invalid("mixing_time: no start distributions given"));
    }
    for (i, d) in starts.iter().enumerate() {
        if !d.matches(chain) {
            return Err(Error::invalid(format!("mixing_time: start {i} is over the wrong space")));
        }
    }
    let pi = stationary(chain)?;
    let (gap, reversible) = eigen_gap(chain)?;
    let pi_star = pi.weights().iter().cloned().fold(f64::INFINITY, f64::min);
    let tau_bound = if gap > 0.0 && pi_star > 0.0 && pi_star < 1.0 {
        gap_mixing_bound(gap, pi_star, eps, reversible)?
    } else {
        f64::INFINITY
    };

    let s = chain.states();
    let mut tau = 0usize;
    let mut worst_curve: Vec<(usize, f64)> = Vec::new();
    let mut cur = vec![0.0f64; s];
    let mut next = vec![0.0f64; s];
    for start in starts {
        cur.copy_from_slice(start.weights());
        let mut curve: Vec<(usize, f64)> = Vec::new();
        let mut t = 0usize;
        loop {
            let tv = 0.5 * cur.iter().zip(pi.weights()).map(|(a, b)| (a - b).abs()).sum::<f64>();
            curve.push((t, tv));
            if tv <= eps {
                break;
            }
            if t >= MIXING_STEP_CAP {
                return Err(Error::numeric(format!(
                    "mixing_time: cap {MIXING_STEP_CAP} steps exceeded; TV still {tv:.6e} \
                     (partial curve over {} points discarded)",
                    curve.len()
                )));
            }
            chain.apply_left(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            t += 1;
        }
        if t >= tau && (t > tau || worst_curve.is_empty()) {
            tau = t;
            worst_curve = curve;
        }
    }
    Ok(MixingReport { gap, reversible, tau, tau_bound, epsilon: eps, distance_curve: worst_curve })
}

/// Default start set: every point mass for the weight chains; all weight-1
/// point masses plus 32 seeded random point masses for full chains.
pub fn default_starts(chain: &ChainMatrix, seed: u64) -> Vec<Distribution> {
    let n = chain.n();
    match chain.space() {
        Space::Zero | Space::Accelerated => (0..chain.states())
            .map(|x| Distribution::point_mass(chain.space(), n, x).expect("state in range"))
            .collect(),
        Space::Full => {
            let states = chain.states();
            let mut picks: Vec<usize> = Vec::new();
            for q in 0..n {
                for a in 1..4usize {
                    picks.push((a << (2 * (n - 1 - q))) - 1);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..32 {
                picks.push(rng.random_range(0..states));
            }
            picks.sort_unstable();
            picks.dedup();
            picks
                .into_iter()
                .map(|x| Distribution::point_mass(Space::Full, n, x).expect("state in range"))
                .collect()
        }
    }
}

/// Gap-based mixing bound `⌈(1/Δ) ln(1/(π* ε))⌉`, doubled for irreversible
/// chains (where Δ is the PP* gap).
pub fn gap_mixing_bound(gap: f64, pi_star: f64, eps: f64, reversible: bool) -> Result<f64> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::invalid(format!("gap_mixing_bound: gap = {gap} not in (0, 1]")));
    }
    if !(pi_star > 0.0 && pi_star < 1.0) {
        return Err(Error::invalid(format!("gap_mixing_bound: pi_star = {pi_star} not in (0, 1)")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("gap_mixing_bound: eps = {eps} not in (0, 1)")));
    }
    let mut bound = (1.0 / (pi_star * eps)).ln() / gap;
    if !reversible {
        bound *= 2.0;
    }
    Ok(bound.max(0.0).ceil())
}

/// 2-norm mixing bound `⌈(2/Δ_{PP*}) ln(1/ε)⌉`.
pub fn l2_mixing_bound(gap_pp: f64, eps: f64) -> Result<f64> {
    if !(gap_pp > 0.0 && gap_pp <= 1.0) {
        return Err(Error::invalid(format!("l2_mixing_bound: gap = {gap_pp} not in (0, 1]")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("l2_mixing_bound: eps = {eps} not in (0, 1)")));
    }
    Ok((2.0 / gap_pp * (1.0 / eps).ln()).max(0.0).ceil())
}
