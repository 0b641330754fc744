//! Monte Carlo circuit and trajectory experiments.
//!
//! Decay experiments track Pauli coefficient vectors trial by trial: each
//! step draws a uniformly random ordered qubit pair and applies the
//! ensemble-averaged pair action (the 16×16 or 256×256 moment matrix of the
//! gate ensemble, exact per gate set) on that pair. The randomness across
//! trials is therefore exactly the randomness of the pair sequence, matching
//! the induced chain semantics; concrete gates are sampled by
//! [`sample_circuit`] and the frame-potential witness.
//!
//! All experiments derive per-trial generators from the master seed by a
//! counter-based stream split, so results are bit-reproducible regardless of
//! scheduling.

use ndarray as nd;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chains::zero_chain;
use crate::moments::{ensemble_ghat, sample_haar_u4, EnsembleKind, GateEnsemble};
use crate::pauli::{expand_pauli, CoeffTensor, DenseOperator};
use crate::{Error, Result};

/// Cap on `n` for first-moment coefficient tracking (`4^n` values per trial).
pub const DECAY_K1_MAX_N: usize = 10;
/// Cap on `n` for two-copy coefficient tracking (`16^n` values per trial).
pub const DECAY_K2_MAX_N: usize = 5;

/// One sampled circuit: a sequence of placed two-qubit gates.
#[derive(Clone, Debug)]
pub struct Circuit {
    n: usize,
    steps: Vec<CircuitStep>,
}

/// A gate placed on an ordered pair of distinct 1-based qubit indices.
#[derive(Clone, Debug)]
pub struct CircuitStep {
    pub pair: (usize, usize),
    pub gate: nd::Array2<C64>,
}

impl Circuit {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> &[CircuitStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Dense `2^n × 2^n` unitary of the whole circuit (later steps applied
    /// on the left).
    pub fn unitary(&self) -> Result<nd::Array2<C64>> {
        if self.n > 10 {
            return Err(Error::invalid(format!(
                "circuit unitary: n = {} exceeds the dense cap 10",
                self.n
            )));
        }
        let dim = 1usize << self.n;
        let mut w = nd::Array2::from_diag_elem(dim, C64::new(1.0, 0.0));
        for step in &self.steps {
            apply_gate_left(&mut w, self.n, step.pair, &step.gate);
        }
        Ok(w)
    }
}

/// Multiplies `w ← G·w` where `G` is `gate` acting on the (1-based) qubit
/// pair of an n-qubit register.
fn apply_gate_left(w: &mut nd::Array2<C64>, n: usize, pair: (usize, usize), gate: &nd::Array2<C64>) {
    let (qi, qj) = (pair.0 - 1, pair.1 - 1);
    let si = 1usize << (n - 1 - qi);
    let sj = 1usize << (n - 1 - qj);
    let dim = 1usize << n;
    let mut buf = [C64::new(0.0, 0.0); 4];
    for col in 0..dim {
        for base in 0..dim {
            if base & si != 0 || base & sj != 0 {
                continue;
            }
            for a in 0..2 {
                for b in 0..2 {
                    buf[2 * a + b] = w[[base + a * si + b * sj, col]];
                }
            }
            for r in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..4 {
                    acc += gate[[r, c]] * buf[c];
                }
                w[[base + (r >> 1) * si + (r & 1) * sj, col]] = acc;
            }
        }
    }
}

/// Draws one gate from an ensemble (Haar sample for the symbolic kind).
fn draw_gate(ens: &GateEnsemble, cumulative: &[f64], rng: &mut impl Rng) -> nd::Array2<C64> {
    if ens.kind() == EnsembleKind::HaarU4 {
        return sample_haar_u4(rng);
    }
    let u: f64 = rng.random();
    let idx = match cumulative.binary_search_by(|c| c.partial_cmp(&u).expect("finite")) {
        Ok(i) => i + 1,
        Err(i) => i,
    };
    ens.gates()[idx.min(ens.len() - 1)].matrix().clone()
}

fn cumulative_weights(ens: &GateEnsemble) -> Vec<f64> {
    let mut acc = 0.0;
    ens.gates()
        .iter()
        .map(|g| {
            acc += g.weight();
            acc
        })
        .collect()
}

/// Samples a `t`-step circuit: each step picks a uniformly random unordered
/// qubit pair (stored with the smaller index first) and a gate from the
/// ensemble.
pub fn sample_circuit(n: usize, t: usize, ens: &GateEnsemble, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::invalid(format!("sample_circuit: n = {n} must be ≥ 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cumulative = cumulative_weights(ens);
    let mut steps = Vec::with_capacity(t);
    for _ in 0..t {
        let i = rng.random_range(0..n);
        let j = {
            let r = rng.random_range(0..n - 1);
            if r >= i {
                r + 1
            } else {
                r
            }
        };
        let pair = (i.min(j) + 1, i.max(j) + 1);
        let gate = draw_gate(ens, &cumulative, &mut rng);
        steps.push(CircuitStep { pair, gate });
    }
    Ok(Circuit { n, steps })
}

/// Tag of a measured decay curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CurveKind {
    #[serde(rename = "k1-sum")]
    K1Sum,
    #[serde(rename = "k2-offdiag-sum")]
    K2OffdiagSum,
    #[serde(rename = "frame-potential")]
    FramePotential,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::K1Sum => "k1-sum",
            CurveKind::K2OffdiagSum => "k2-offdiag-sum",
            CurveKind::FramePotential => "frame-potential",
        }
    }
}

/// One point of a Monte Carlo curve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvePoint {
    pub t: usize,
    pub value: f64,
    pub stderr: f64,
}

/// A trial-averaged decay curve with standard errors.
#[derive(Clone, Debug, Serialize)]
pub struct DecayCurve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
}

/// Accumulates per-step sums and squared sums across trials.
struct CurveAccumulator {
    sums: Vec<f64>,
    sq_sums: Vec<f64>,
    trials: usize,
}

impl CurveAccumulator {
    fn new(len: usize) -> Self {
        CurveAccumulator { sums: vec![0.0; len], sq_sums: vec![0.0; len], trials: 0 }
    }

    fn record(&mut self, t: usize, value: f64) {
        self.sums[t] += value;
        self.sq_sums[t] += value * value;
    }

    fn finish(self, kind: CurveKind) -> DecayCurve {
        let t_count = self.sums.len();
        let n = self.trials as f64;
        let mut points = Vec::with_capacity(t_count);
        for t in 0..t_count {
            let mean = self.sums[t] / n;
            let stderr = if self.trials > 1 {
                let var = ((self.sq_sums[t] - n * mean * mean) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            points.push(CurvePoint { t, value: mean, stderr });
        }
        DecayCurve { kind, points }
    }
}

/// Per-trial generator: stream `trial` of the master seed.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[inline]
pub(crate) fn digit(idx: usize, n: usize, q: usize) -> usize {
    (idx >> (2 * (n - 1 - q))) & 3
}

/// Pair action used by the decay experiments.
pub(crate) enum PairAction {
    /// Haar closed form (k=1 kills, k=2 mixes the diagonal).
    Haar,
    /// Dense ensemble moment matrix (16×16 for k=1, 256×256 for k=2).
    Dense(nd::Array2<f64>),
}

pub(crate) fn pair_action(ens: &GateEnsemble, k: usize) -> Result<PairAction> {
    if ens.kind() == EnsembleKind::HaarU4 {
        Ok(PairAction::Haar)
    } else {
        Ok(PairAction::Dense(ensemble_ghat(ens, k)?.entries().clone()))
    }
}

/// Applies the k=1 pair action on qubits `(i, j)` of the coefficient vector.
pub(crate) fn apply_pair_k1(v: &mut [f64], n: usize, i: usize, j: usize, action: &PairAction) {
    let si = 1usize << (2 * (n - 1 - i));
    let sj = 1usize << (2 * (n - 1 - j));
    let total = v.len();
    let mut buf = [0.0f64; 16];
    for base in 0..total {
        if digit(base, n, i) != 0 || digit(base, n, j) != 0 {
            continue;
        }
        match action {
            PairAction::Haar => {
                // identity label survives; every other pair label dies
                for l in 1..16 {
                    v[base + (l >> 2) * si + (l & 3) * sj] = 0.0;
                }
            }
            PairAction::Dense(m) => {
                for (l, slot) in buf.iter_mut().enumerate() {
                    *slot = v[base + (l >> 2) * si + (l & 3) * sj];
                }
                for q in 0..16 {
                    let row = m.row(q);
                    let mut acc = 0.0;
                    for l in 0..16 {
                        acc += row[l] * buf[l];
                    }
                    v[base + (q >> 2) * si + (q & 3) * sj] = acc;
                }
            }
        }
    }
}

/// Applies the k=2 pair action on qubits `(i, j)` of the two-copy tensor.
pub(crate) fn apply_pair_k2(v: &mut [f64], n: usize, i: usize, j: usize, action: &PairAction) {
    let block = 1usize << (2 * n);
    let s1i = (1usize << (2 * (n - 1 - i))) * block;
    let s1j = (1usize << (2 * (n - 1 - j))) * block;
    let s2i = 1usize << (2 * (n - 1 - i));
    let s2j = 1usize << (2 * (n - 1 - j));
    let total = v.len();
    let mut buf = [0.0f64; 256];
    let offset = |l1: usize, l2: usize| {
        (l1 >> 2) * s1i + (l1 & 3) * s1j + (l2 >> 2) * s2i + (l2 & 3) * s2j
    };
    for base in 0..total {
        let p1 = base / block;
        let p2 = base % block;
        if digit(p1, n, i) != 0
            || digit(p1, n, j) != 0
            || digit(p2, n, i) != 0
            || digit(p2, n, j) != 0
        {
            continue;
        }
        match action {
            PairAction::Haar => {
                let keep = v[base];
                let mut diag_rest = 0.0;
                for l in 1..16 {
                    diag_rest += v[base + offset(l, l)];
                }
                let mixed = diag_rest / 15.0;
                for l1 in 0..16 {
                    for l2 in 0..16 {
                        let o = base + offset(l1, l2);
                        v[o] = if l1 != l2 {
                            0.0
                        } else if l1 == 0 {
                            keep
                        } else {
                            mixed
                        };
                    }
                }
            }
            PairAction::Dense(m) => {
                for l1 in 0..16 {
                    for l2 in 0..16 {
                        buf[l1 * 16 + l2] = v[base + offset(l1, l2)];
                    }
                }
                for q in 0..256 {
                    let row = m.row(q);
                    let mut acc = 0.0;
                    for (l, &b) in buf.iter().enumerate() {
                        acc += row[l] * b;
                    }
                    v[base + offset(q >> 4, q & 15)] = acc;
                }
            }
        }
    }
}

fn sample_ordered_pair(n: usize, rng: &mut impl Rng) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let r = rng.random_range(0..n - 1);
    let j = if r >= i { r + 1 } else { r };
    (i, j)
}

/// First-moment decay: tracks `Σ_{p≠0} |γ(p)|` of the coefficient vector as
/// random ordered pairs receive the ensemble-averaged gate action, averaged
/// over `trials` independent pair sequences.
pub fn decay_k1(
    n: usize,
    t_max: usize,
    ens: &GateEnsemble,
    init: &DenseOperator,
    trials: usize,
    seed: u64,
) -> Result<DecayCurve> {
    if !(2..=DECAY_K1_MAX_N).contains(&n) {
        return Err(Error::invalid(format!("decay_k1: n = {n} outside 2..={DECAY_K1_MAX_N}")));
    }
    if trials == 0 {
        return Err(Error::invalid("decay_k1: trials must be ≥ 1"));
    }
    let gamma0 = expand_pauli(init, n, 1)?;
    let action = pair_action(ens, 1)?;
    let mut acc = CurveAccumulator::new(t_max + 1);
    let mut v = vec![0.0f64; gamma0.len()];
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        v.copy_from_slice(gamma0.values());
        acc.record(0, off_identity_abs_sum_k1(&v));
        for t in 1..=t_max {
            let (i, j) = sample_ordered_pair(n, &mut rng);
            apply_pair_k1(&mut v, n, i, j, &action);
            acc.record(t, off_identity_abs_sum_k1(&v));
        }
        acc.trials += 1;
    }
    Ok(acc.finish(CurveKind::K1Sum))
}

fn off_identity_abs_sum_k1(v: &[f64]) -> f64 {
    v[1..].iter().map(|x| x.abs()).sum()
}

/// Two-copy off-diagonal decay: tracks `Σ_{p₁≠p₂} |γ(p₁,p₂)|` under the
/// k=2 ensemble-averaged pair action.
pub fn decay_k2_offdiag(
    n: usize,
    t_max: usize,
    ens: &GateEnsemble,
    init: &CoeffTensor,
    trials: usize,
    seed: u64,
) -> Result<DecayCurve> {
    if !(2..=DECAY_K2_MAX_N).contains(&n) {
        return Err(Error::invalid(format!(
            "decay_k2_offdiag: n = {n} outside 2..={DECAY_K2_MAX_N}"
        )));
    }
    if init.n() != n || init.k() != 2 {
        return Err(Error::invalid(format!(
            "decay_k2_offdiag: init has n={}, k={}; need n={n}, k=2",
            init.n(),
            init.k()
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("decay_k2_offdiag: trials must be ≥ 1"));
    }
    let action = pair_action(ens, 2)?;
    let mut acc = CurveAccumulator::new(t_max + 1);
    let mut v = vec![0.0f64; init.len()];
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        v.copy_from_slice(init.values());
        acc.record(0, off_diagonal_abs_sum_k2(&v, n));
        for t in 1..=t_max {
            let (i, j) = sample_ordered_pair(n, &mut rng);
            apply_pair_k2(&mut v, n, i, j, &action);
            acc.record(t, off_diagonal_abs_sum_k2(&v, n));
        }
        acc.trials += 1;
    }
    Ok(acc.finish(CurveKind::K2OffdiagSum))
}

fn off_diagonal_abs_sum_k2(v: &[f64], n: usize) -> f64 {
    let block = 1usize << (2 * n);
    let mut total = 0.0;
    for (idx, &x) in v.iter().enumerate() {
        if idx / block != idx % block {
            total += x.abs();
        }
    }
    total
}

/// A sampled zero-chain path with its occupancy statistics.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroTrajectory {
    pub n: usize,
    pub start: usize,
    pub steps: usize,
    /// Visited weights, length `steps + 1` (including the start).
    pub trajectory: Vec<u32>,
    /// Time spent at each weight `x`, indexed `x − 1`.
    pub occupancy: Vec<u64>,
    /// Histogram of waiting times between moves: `(run length, count)`.
    pub waiting_times: Vec<(usize, u64)>,
    /// Mean position over the last half of the path.
    pub final_window_mean: f64,
    /// Batch-means standard error of the final-window mean (32 batches).
    pub final_window_stderr: f64,
}

/// Samples a zero-chain trajectory and summarizes it.
pub fn zero_trajectory(n: usize, steps: usize, start: usize, seed: u64) -> Result<ZeroTrajectory> {
    let chain = zero_chain(n)?;
    if !(1..=n).contains(&start) {
        return Err(Error::invalid(format!("zero_trajectory: start {start} outside 1..={n}")));
    }
    let (down, stay, _) = chain.bands().expect("zero chain is tridiagonal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectory = Vec::with_capacity(steps + 1);
    let mut occupancy = vec![0u64; n];
    let mut x = start; // 1-based weight
    trajectory.push(x as u32);
    occupancy[x - 1] += 1;
    let mut waiting: std::collections::HashMap<usize, u64> = std::collections::HashMap::new();
    let mut run_len = 0usize;
    for _ in 0..steps {
        let u: f64 = rng.random();
        let idx = x - 1;
        let next = if u < down[idx] {
            x - 1
        } else if u < down[idx] + stay[idx] {
            x
        } else {
            x + 1
        };
        if next == x {
            run_len += 1;
        } else {
            *waiting.entry(run_len + 1).or_insert(0) += 1;
            run_len = 0;
        }
        x = next;
        trajectory.push(x as u32);
        occupancy[x - 1] += 1;
    }
    let mut waiting_times: Vec<(usize, u64)> = waiting.into_iter().collect();
    waiting_times.sort_unstable();

    // final-window mean over the last half, with batch-means stderr
    let len = trajectory.len();
    let window = &trajectory[len - len.div_ceil(2)..];
    let mean = window.iter().map(|&w| w as f64).sum::<f64>() / window.len() as f64;
    let batches = window.len().min(32);
    let batch_size = window.len() / batches;
    let mut batch_means = Vec::with_capacity(batches);
    for b in 0..batches {
        let lo = b * batch_size;
        let hi = if b + 1 == batches { window.len() } else { lo + batch_size };
        let m = window[lo..hi].iter().map(|&w| w as f64).sum::<f64>() / (hi - lo) as f64;
        batch_means.push(m);
    }
    let stderr = if batches > 1 {
        let bm = batch_means.iter().sum::<f64>() / batches as f64;
        let var = batch_means.iter().map(|m| (m - bm) * (m - bm)).sum::<f64>()
            / (batches as f64 - 1.0);
        (var / batches as f64).sqrt()
    } else {
        0.0
    };
    Ok(ZeroTrajectory {
        n,
        start,
        steps,
        trajectory,
        occupancy,
        waiting_times,
        final_window_mean: mean,
        final_window_stderr: stderr,
    })
}

/// Source of unitaries for the frame potential.
pub enum FrameSource<'a> {
    /// Single gates drawn from an ensemble (4-dimensional).
    Ensemble(&'a GateEnsemble),
    /// Whole sampled circuits on `n` qubits, `t` steps each.
    CircuitSampler { n: usize, t: usize, ens: &'a GateEnsemble },
}

/// Monte Carlo frame potential `E |tr(U†V)|^{2k}` over independent draws
/// `U, V`; returns `(value, standard error)`.
pub fn frame_potential(
    source: &FrameSource<'_>,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(1..=2).contains(&k) {
        return Err(Error::invalid(format!("frame_potential: k = {k} not in {{1, 2}}")));
    }
    if trials == 0 {
        return Err(Error::invalid("frame_potential: trials must be ≥ 1"));
    }
    let mut sum = 0.0f64;
    let mut sq_sum = 0.0f64;
    match source {
        FrameSource::Ensemble(ens) => {
            let cumulative = cumulative_weights(ens);
            for trial in 0..trials {
                let mut rng = trial_rng(seed, trial);
                let u = draw_gate(ens, &cumulative, &mut rng);
                let v = draw_gate(ens, &cumulative, &mut rng);
                let value = overlap_power(&u, &v, k);
                sum += value;
                sq_sum += value * value;
            }
        }
        FrameSource::CircuitSampler { n, t, ens } => {
            for trial in 0..trials {
                let mut rng = trial_rng(seed, trial);
                let s1 = rng.random::<u64>();
                let s2 = rng.random::<u64>();
                let u = sample_circuit(*n, *t, ens, s1)?.unitary()?;
                let v = sample_circuit(*n, *t, ens, s2)?.unitary()?;
                let value = overlap_power(&u, &v, k);
                sum += value;
                sq_sum += value * value;
            }
        }
    }
    let nf = trials as f64;
    let mean = sum / nf;
    let stderr = if trials > 1 {
        (((sq_sum - nf * mean * mean) / (nf - 1.0)).max(0.0) / nf).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

/// `|tr(U†V)|^{2k}` without forming the product matrix.
fn overlap_power(u: &nd::Array2<C64>, v: &nd::Array2<C64>, k: usize) -> f64 {
    let tr: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    tr.norm_sqr().powi(k as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::zero_stationary;

    fn cnot_ensemble() -> GateEnsemble {
        let mut m = nd::Array2::from_elem((4, 4), C64::new(0.0, 0.0));
        for (col, row) in [(0usize, 0usize), (1, 1), (2, 3), (3, 2)] {
            m[[row, col]] = C64::new(1.0, 0.0);
        }
        GateEnsemble::single(m, "cnot").unwrap()
    }

    fn zero_state_two_copy(n: usize) -> CoeffTensor {
        let rho = DenseOperator::zero_state(n).unwrap();
        expand_pauli(&rho, n, 1).unwrap().two_copy_product().unwrap()
    }

    #[test]
    fn sampled_circuits_are_deterministic_and_balanced() {
        let ens = GateEnsemble::haar_u4();
        assert!(sample_circuit(3, 0, &ens, 1).unwrap().is_empty());
        let a = sample_circuit(4, 50, &ens, 99).unwrap();
        let b = sample_circuit(4, 50, &ens, 99).unwrap();
        for (sa, sb) in a.steps().iter().zip(b.steps()) {
            assert_eq!(sa.pair, sb.pair);
            assert_eq!(sa.gate, sb.gate);
        }
        // unordered pair frequencies ≈ 1/6 over 1e5 steps at n=4
        let big = sample_circuit(4, 100_000, &ens, 5).unwrap();
        let mut counts = std::collections::HashMap::new();
        for s in big.steps() {
            assert!(s.pair.0 < s.pair.1 && s.pair.1 <= 4 && s.pair.0 >= 1);
            *counts.entry(s.pair).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        let se = (1.0 / 6.0 * 5.0 / 6.0 / 100_000.0f64).sqrt();
        for (&pair, &c) in &counts {
            let freq = c as f64 / 100_000.0;
            assert!(
                (freq - 1.0 / 6.0).abs() < 3.5 * se,
                "pair {pair:?} frequency {freq}"
            );
        }
    }

    #[test]
    fn decay_k1_haar_starts_right_and_dies_at_n2() {
        // |00⟩⟨00| on n=2: Σ_{p≠0}|γ₀| = 3/2; the single pair refresh kills
        // every nonzero coefficient in one step.
        let init = DenseOperator::zero_state(2).unwrap();
        let curve = decay_k1(2, 3, &GateEnsemble::haar_u4(), &init, 20, 7).unwrap();
        assert_eq!(curve.kind, CurveKind::K1Sum);
        assert!((curve.points[0].value - 1.5).abs() < 1e-12);
        assert_eq!(curve.points[0].stderr, 0.0);
        for p in &curve.points[1..] {
            assert!(p.value < 1e-12, "t={} value {}", p.t, p.value);
            assert!(p.stderr < 1e-12);
        }
    }

    #[test]
    fn decay_k1_cnot_preserves_total_mass() {
        // CNOT conjugation permutes Pauli strings with signs, so the
        // per-trial 1-norm is constant.
        let init = DenseOperator::zero_state(2).unwrap();
        let curve = decay_k1(2, 10, &cnot_ensemble(), &init, 25, 3).unwrap();
        for p in &curve.points {
            assert!((p.value - 1.5).abs() < 1e-12, "t={} value {}", p.t, p.value);
            assert!(p.stderr < 1e-12);
        }
    }

    #[test]
    fn decay_k1_determinism() {
        let init = DenseOperator::zero_state(3).unwrap();
        let ens = GateEnsemble::haar_u4();
        let a = decay_k1(3, 12, &ens, &init, 40, 123).unwrap();
        let b = decay_k1(3, 12, &ens, &init, 40, 123).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.value.to_bits(), y.value.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
    }

    #[test]
    fn decay_k1_haar_respects_per_weight_bound() {
        // Initial operators (I + σ_p)/2^n isolate a single string p, so the
        // curve is exactly |γ₀(p)| times the survival probability, which the
        // per-weight bound e^{−td/n} must dominate.
        let n = 5usize;
        let dim = 1usize << n;
        let scale = 1.0 / (dim as f64).sqrt();
        for (letters, d) in [([3usize, 0, 0, 0, 0], 1usize), ([3, 1, 2, 0, 0], 3), ([1, 1, 2, 3, 3], 5)]
        {
            let p = crate::pauli::PauliString::from_letters(
                &letters.iter().map(|&l| l as u8).collect::<Vec<_>>(),
            )
            .unwrap();
            let rho_m = (nd::Array2::from_diag_elem(dim, C64::new(1.0, 0.0)) + p.matrix())
                .mapv(|z| z / dim as f64);
            let init = DenseOperator::new(rho_m).unwrap();
            let curve = decay_k1(n, 12, &GateEnsemble::haar_u4(), &init, 1500, 11).unwrap();
            assert!((curve.points[0].value - scale).abs() < 1e-12);
            for pt in &curve.points {
                let bound = scale * (-(pt.t as f64) * d as f64 / n as f64).exp();
                assert!(
                    pt.value <= bound + 3.0 * pt.stderr + 1e-12,
                    "weight {d}, t={}: value {} > bound {}",
                    pt.t,
                    pt.value,
                    bound
                );
            }
        }
    }

    #[test]
    fn decay_k2_haar_starts_right_and_dies_at_n2() {
        // Off-diagonal mass of the two-copy zero state is 2^n − 1 = 3; one
        // pair refresh zeroes the whole off-diagonal sector at n=2.
        let init = zero_state_two_copy(2);
        let curve = decay_k2_offdiag(2, 3, &GateEnsemble::haar_u4(), &init, 20, 7).unwrap();
        assert_eq!(curve.kind, CurveKind::K2OffdiagSum);
        assert!((curve.points[0].value - 3.0).abs() < 1e-12);
        for p in &curve.points[1..] {
            assert!(p.value < 1e-12, "t={} value {}", p.t, p.value);
        }
    }

    #[test]
    fn decay_k2_haar_below_closed_form_bound() {
        let n = 3usize;
        let init = zero_state_two_copy(n);
        let curve = decay_k2_offdiag(n, 20, &GateEnsemble::haar_u4(), &init, 400, 19).unwrap();
        for p in &curve.points {
            let decay = (-(p.t as f64) / n as f64).exp();
            let bound = (4.0f64).powi(n as i32) * ((1.0 + 3.0 * decay).powi(n as i32) - 1.0);
            assert!(
                p.value <= bound + 3.0 * p.stderr + 1e-12,
                "t={}: value {} > bound {}",
                p.t,
                p.value,
                bound
            );
        }
    }

    #[test]
    fn decay_k2_explicit_ensemble_runs() {
        // CNOT moment action at k=2 also permutes pair labels: the
        // off-diagonal mass is preserved per trial.
        let init = zero_state_two_copy(2);
        let curve = decay_k2_offdiag(2, 5, &cnot_ensemble(), &init, 10, 1).unwrap();
        for p in &curve.points {
            assert!((p.value - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_caps_and_validation() {
        let init = DenseOperator::zero_state(2).unwrap();
        let ens = GateEnsemble::haar_u4();
        assert!(decay_k1(1, 5, &ens, &init, 10, 0).is_err());
        assert!(decay_k1(11, 5, &ens, &init, 10, 0).is_err());
        assert!(decay_k1(2, 5, &ens, &init, 0, 0).is_err());
        // mismatched operator dimension
        assert!(decay_k1(3, 5, &ens, &init, 10, 0).is_err());
        let k2 = zero_state_two_copy(2);
        assert!(decay_k2_offdiag(6, 5, &ens, &k2, 10, 0).is_err());
        assert!(decay_k2_offdiag(3, 5, &ens, &k2, 10, 0).is_err());
    }

    #[test]
    fn trajectory_basics_and_occupancy() {
        // steps = 0 → just the start
        let t0 = zero_trajectory(5, 0, 3, 1).unwrap();
        assert_eq!(t0.trajectory, vec![3]);
        assert_eq!(t0.occupancy.iter().sum::<u64>(), 1);
        assert!(zero_trajectory(5, 10, 0, 1).is_err());
        assert!(zero_trajectory(5, 10, 6, 1).is_err());
        // n=2 long-run occupancy matches π₀ = (0.4, 0.6)
        let tr = zero_trajectory(2, 100_000, 2, 42).unwrap();
        let total: u64 = tr.occupancy.iter().sum();
        assert_eq!(total, 100_001);
        let f1 = tr.occupancy[0] as f64 / total as f64;
        assert!((f1 - 0.4).abs() < 0.01, "occupancy fraction {f1}");
        // waiting-time histogram counts the moves
        let moves: u64 = tr.waiting_times.iter().map(|&(_, c)| c).sum();
        assert!(moves > 0);
        let run_steps: u64 = tr.waiting_times.iter().map(|&(l, c)| l as u64 * c).sum();
        assert!(run_steps <= 100_000);
    }

    #[test]
    fn trajectory_matches_stationary_in_tv() {
        let n = 16usize;
        let tr = zero_trajectory(n, 1_000_000, 1, 7).unwrap();
        let total: u64 = tr.occupancy.iter().sum();
        let pi = zero_stationary(n).unwrap();
        let tv = 0.5
            * tr.occupancy
                .iter()
                .zip(pi.weights())
                .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
                .sum::<f64>();
        assert!(tv < 0.02, "TV to stationary {tv}");
        // chi-square sanity over well-populated bins (expected ≥ 25), with a
        // generous allowance for autocorrelation and the burn-in from x=1
        let chi2: f64 = tr
            .occupancy
            .iter()
            .zip(pi.weights())
            .filter_map(|(&c, &p)| {
                let exp = p * total as f64;
                (exp >= 25.0).then(|| (c as f64 - exp) * (c as f64 - exp) / exp)
            })
            .sum();
        assert!(chi2 < 2000.0, "chi-square {chi2}");
    }

    #[test]
    fn trajectory_final_window_peaks_at_three_quarters() {
        let n = 256usize;
        let tr = zero_trajectory(n, 1_000_000, 1, 3).unwrap();
        let pi = zero_stationary(n).unwrap();
        let pi_mean: f64 = pi
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &p)| (i + 1) as f64 * p)
            .sum();
        assert!((pi_mean - 0.75 * n as f64).abs() < 1.0, "π₀ mean {pi_mean}");
        let dev = (tr.final_window_mean - pi_mean).abs();
        assert!(
            dev <= 3.0 * tr.final_window_stderr.max(0.05),
            "window mean {} vs π₀ mean {pi_mean} (stderr {})",
            tr.final_window_mean,
            tr.final_window_stderr
        );
    }

    #[test]
    fn frame_potential_witnesses() {
        // identity-only ensemble: exactly |tr I|⁴ = 256 with zero spread
        let id = nd::Array2::from_diag_elem(4, C64::new(1.0, 0.0));
        let ens = GateEnsemble::single(id, "identity").unwrap();
        let (value, stderr) = frame_potential(&FrameSource::Ensemble(&ens), 2, 100, 0).unwrap();
        assert_eq!(value, 256.0);
        assert_eq!(stderr, 0.0);
        // Haar samples at k=1 → 1
        let haar = GateEnsemble::haar_u4();
        let (value, stderr) = frame_potential(&FrameSource::Ensemble(&haar), 1, 4000, 2).unwrap();
        assert!((value - 1.0).abs() <= 3.0 * stderr, "value {value} ± {stderr}");
        // Clifford-2 at k=2 → Haar value 2
        let cliff = GateEnsemble::clifford2().unwrap();
        let (value, stderr) =
            frame_potential(&FrameSource::Ensemble(&cliff), 2, 20_000, 4).unwrap();
        assert!((value - 2.0).abs() <= 3.0 * stderr, "value {value} ± {stderr}");
        assert!(frame_potential(&FrameSource::Ensemble(&haar), 3, 10, 0).is_err());
    }

    #[test]
    fn frame_potential_circuit_sampler() {
        // On n=2 a single Haar gate already makes the circuit Haar on U(4):
        // k=1 frame potential is 1.
        let haar = GateEnsemble::haar_u4();
        let source = FrameSource::CircuitSampler { n: 2, t: 3, ens: &haar };
        let (value, stderr) = frame_potential(&source, 1, 1500, 9).unwrap();
        assert!((value - 1.0).abs() <= 3.0 * stderr.max(1e-3), "value {value} ± {stderr}");
    }

    #[test]
    fn circuit_unitary_is_unitary() {
        let ens = GateEnsemble::haar_u4();
        let circ = sample_circuit(3, 10, &ens, 77).unwrap();
        let w = circ.unitary().unwrap();
        let wd = w.t().mapv(|z| z.conj());
        let prod = w.dot(&wd);
        let id = nd::Array2::from_diag_elem(8, C64::new(1.0, 0.0));
        let dev = (&prod - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }
}
