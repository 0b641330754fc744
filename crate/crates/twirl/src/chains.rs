//! Markov chains induced by random two-qubit circuits.
//!
//! The full chain lives on the `4^n − 1` nonzero Pauli strings: one step
//! picks an ordered qubit pair uniformly and applies the diagonal
//! `(p,p)`-sector of the pair moment matrix there. Lumping states by their
//! number of non-identity letters yields the zero chain, a birth–death
//! process on `{1, …, n}` with stationary law `π₀(x) ∝ 3^x C(n,x)`; the
//! accelerated chain is the zero chain conditioned on moving.

use ndarray as nd;

use crate::moments::MomentMatrix;
use crate::{Error, Result};

/// Cap on `n` for materializing the full chain (`4^n − 1` states).
pub const FULL_CHAIN_MAX_N: usize = 8;
/// Cap on `n` for the weight chains (tridiagonal storage).
pub const WEIGHT_CHAIN_MAX_N: usize = 1_000_000;
/// Full chains with at most this many states are stored dense.
const DENSE_STATE_CAP: usize = 1024;

/// State space tag of a chain or distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// Nonzero Pauli strings on n qubits; state index `s − 1` for string `s`.
    Full,
    /// Hamming-weight classes `{1, …, n}`; state index `x − 1` for weight `x`.
    Zero,
    /// Weight classes under the move-conditioned chain.
    Accelerated,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Full => "full",
            Space::Zero => "zero",
            Space::Accelerated => "accelerated",
        }
    }

    fn states(self, n: usize) -> usize {
        match self {
            Space::Full => (1usize << (2 * n)) - 1,
            Space::Zero | Space::Accelerated => n,
        }
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(nd::Array2<f64>),
    /// Birth–death rows: `down[x]`, `stay[x]`, `up[x]` hold
    /// `P(x, x−1)`, `P(x, x)`, `P(x, x+1)` at 0-based state x.
    Tridiagonal { down: Vec<f64>, stay: Vec<f64>, up: Vec<f64> },
    Csr { row_ptr: Vec<usize>, cols: Vec<u32>, vals: Vec<f64> },
}

/// A row-stochastic transition matrix over one of the three state spaces.
#[derive(Clone, Debug)]
pub struct ChainMatrix {
    space: Space,
    n: usize,
    storage: Storage,
}

impl ChainMatrix {
    pub fn space(&self) -> Space {
        self.space
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        self.space.states(self.n)
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn is_tridiagonal(&self) -> bool {
        matches!(self.storage, Storage::Tridiagonal { .. })
    }

    /// Transition probability between 0-based state indices.
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[[x, y]],
            Storage::Tridiagonal { down, stay, up } => {
                if y + 1 == x {
                    down[x]
                } else if y == x {
                    stay[x]
                } else if y == x + 1 {
                    up[x]
                } else {
                    0.0
                }
            }
            Storage::Csr { row_ptr, cols, vals } => {
                let lo = row_ptr[x];
                let hi = row_ptr[x + 1];
                match cols[lo..hi].binary_search(&(y as u32)) {
                    Ok(off) => vals[lo + off],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// The tridiagonal bands `(down, stay, up)` of a weight chain.
    pub fn bands(&self) -> Option<(&[f64], &[f64], &[f64])> {
        match &self.storage {
            Storage::Tridiagonal { down, stay, up } => Some((down, stay, up)),
            _ => None,
        }
    }

    /// One step of the distribution-evolution map `μ ↦ μP`, written into
    /// `out` (both slices of length `states()`).
    pub fn apply_left(&self, mu: &[f64], out: &mut [f64]) {
        let s = self.states();
        debug_assert_eq!(mu.len(), s);
        debug_assert_eq!(out.len(), s);
        match &self.storage {
            Storage::Dense(m) => {
                out.fill(0.0);
                for (x, &w) in mu.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let row = m.row(x);
                    for (y, o) in out.iter_mut().enumerate() {
                        *o += w * row[y];
                    }
                }
            }
            Storage::Tridiagonal { down, stay, up } => {
                for y in 0..s {
                    let mut v = mu[y] * stay[y];
                    if y > 0 {
                        v += mu[y - 1] * up[y - 1];
                    }
                    if y + 1 < s {
                        v += mu[y + 1] * down[y + 1];
                    }
                    out[y] = v;
                }
            }
            Storage::Csr { row_ptr, cols, vals } => {
                out.fill(0.0);
                for (x, &w) in mu.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for idx in row_ptr[x]..row_ptr[x + 1] {
                        out[cols[idx] as usize] += w * vals[idx];
                    }
                }
            }
        }
    }

    /// Dense copy of the matrix; refused above the dense solver cap.
    pub fn to_dense(&self) -> Result<nd::Array2<f64>> {
        let s = self.states();
        if s > 4096 {
            return Err(Error::invalid(format!(
                "to_dense: {s} states exceed the 4096-state dense cap"
            )));
        }
        Ok(match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Tridiagonal { down, stay, up } => {
                let mut m = nd::Array2::zeros((s, s));
                for x in 0..s {
                    m[[x, x]] = stay[x];
                    if x > 0 {
                        m[[x, x - 1]] = down[x];
                    }
                    if x + 1 < s {
                        m[[x, x + 1]] = up[x];
                    }
                }
                m
            }
            Storage::Csr { row_ptr, cols, vals } => {
                let mut m = nd::Array2::zeros((s, s));
                for x in 0..s {
                    for idx in row_ptr[x]..row_ptr[x + 1] {
                        m[[x, cols[idx] as usize]] = vals[idx];
                    }
                }
                m
            }
        })
    }

    /// Nonzero entries as `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let s = self.states();
        let mut out = Vec::new();
        match &self.storage {
            Storage::Dense(m) => {
                for x in 0..s {
                    for y in 0..s {
                        if m[[x, y]] != 0.0 {
                            out.push((x, y, m[[x, y]]));
                        }
                    }
                }
            }
            Storage::Tridiagonal { down, stay, up } => {
                for x in 0..s {
                    if x > 0 && down[x] != 0.0 {
                        out.push((x, x - 1, down[x]));
                    }
                    if stay[x] != 0.0 {
                        out.push((x, x, stay[x]));
                    }
                    if x + 1 < s && up[x] != 0.0 {
                        out.push((x, x + 1, up[x]));
                    }
                }
            }
            Storage::Csr { row_ptr, cols, vals } => {
                for x in 0..s {
                    for idx in row_ptr[x]..row_ptr[x + 1] {
                        if vals[idx] != 0.0 {
                            out.push((x, cols[idx] as usize, vals[idx]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest deviation of any row sum from 1.
    pub fn row_sum_deviation(&self) -> f64 {
        let s = self.states();
        let mut worst = 0.0f64;
        match &self.storage {
            Storage::Dense(m) => {
                for x in 0..s {
                    worst = worst.max((m.row(x).sum() - 1.0).abs());
                }
            }
            Storage::Tridiagonal { down, stay, up } => {
                for x in 0..s {
                    worst = worst.max((down[x] + stay[x] + up[x] - 1.0).abs());
                }
            }
            Storage::Csr { row_ptr, vals, .. } => {
                for x in 0..s {
                    let sum: f64 = vals[row_ptr[x]..row_ptr[x + 1]].iter().sum();
                    worst = worst.max((sum - 1.0).abs());
                }
            }
        }
        worst
    }
}

/// A probability vector over one of the chain state spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    space: Space,
    n: usize,
    weights: Vec<f64>,
}

impl Distribution {
    /// Validates length, nonnegativity (−1e-14 dust is clamped), and total
    /// mass within 1e-9 of 1, then renormalizes exactly.
    pub fn from_weights(space: Space, n: usize, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.states(n) {
            return Err(Error::invalid(format!(
                "distribution: {} weights for a {}-state {} space",
                weights.len(),
                space.states(n),
                space.name()
            )));
        }
        let mut total = 0.0f64;
        for w in &mut weights {
            if *w < -1e-14 || !w.is_finite() {
                return Err(Error::invalid(format!("distribution: weight {w} is negative")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
            total += *w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "distribution: weights sum to {total}, more than 1e-9 from 1"
            )));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Distribution { space, n, weights })
    }

    /// Point mass on a 0-based state index.
    pub fn point_mass(space: Space, n: usize, state: usize) -> Result<Self> {
        let s = space.states(n);
        if state >= s {
            return Err(Error::invalid(format!(
                "point_mass: state {state} out of range for {} states",
                s
            )));
        }
        let mut weights = vec![0.0; s];
        weights[state] = 1.0;
        Ok(Distribution { space, n, weights })
    }

    /// Uniform distribution over the space.
    pub fn uniform(space: Space, n: usize) -> Self {
        let s = space.states(n);
        Distribution { space, n, weights: vec![1.0 / s as f64; s] }
    }

    pub(crate) fn from_raw(space: Space, n: usize, weights: Vec<f64>) -> Self {
        Distribution { space, n, weights }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn matches(&self, chain: &ChainMatrix) -> bool {
        self.space == chain.space() && self.n == chain.n()
    }
}

/// Letter of string `s` (1-based nonzero Pauli index … stored raw) at qubit
/// `q` (0-based, most significant digit first).
#[inline]
fn letter(s: usize, n: usize, q: usize) -> usize {
    (s >> (2 * (n - 1 - q))) & 3
}

/// Number of non-identity letters of the string with raw index `s`.
pub fn string_weight(mut s: usize) -> usize {
    let mut w = 0;
    while s != 0 {
        if s & 3 != 0 {
            w += 1;
        }
        s >>= 2;
    }
    w
}

/// The full chain on nonzero Pauli strings: the uniform average over ordered
/// qubit pairs `(i, j)` of the pair moment matrix's diagonal sector embedded
/// on qubits `i, j`.
pub fn full_chain(n: usize, pair_ghat: &MomentMatrix) -> Result<ChainMatrix> {
    if !(2..=FULL_CHAIN_MAX_N).contains(&n) {
        return Err(Error::invalid(format!(
            "full_chain: n = {n} outside 2..={FULL_CHAIN_MAX_N}"
        )));
    }
    if pair_ghat.d() != 4 || pair_ghat.k() != 2 {
        return Err(Error::invalid(format!(
            "full_chain: pair moment matrix has d={}, k={}; need d=4, k=2",
            pair_ghat.d(),
            pair_ghat.k()
        )));
    }
    let d = pair_ghat.diag_sector()?;
    let states = (1usize << (2 * n)) - 1;
    let pair_weight = 1.0 / (n * (n - 1)) as f64;

    // Reusable scratch row; `touched` records indices to reset.
    let mut scratch = vec![0.0f64; states];
    let mut touched: Vec<usize> = Vec::with_capacity(16 * n * n);
    let fill_row = |x: usize, scratch: &mut Vec<f64>, touched: &mut Vec<usize>| -> Result<()> {
        let s = x + 1;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let a = letter(s, n, i);
                let b = letter(s, n, j);
                let l_in = 4 * a + b;
                let base = s
                    - (a << (2 * (n - 1 - i)))
                    - (b << (2 * (n - 1 - j)));
                for l_out in 0..16usize {
                    let p = d[[l_out, l_in]];
                    if p == 0.0 {
                        continue;
                    }
                    let (a2, b2) = (l_out >> 2, l_out & 3);
                    let y_string = base + (a2 << (2 * (n - 1 - i))) + (b2 << (2 * (n - 1 - j)));
                    debug_assert!(y_string != 0, "transition into the zero string");
                    let y = y_string - 1;
                    if scratch[y] == 0.0 {
                        touched.push(y);
                    }
                    scratch[y] += pair_weight * p;
                }
            }
        }
        // clamp dust, validate, renormalize
        let mut sum = 0.0f64;
        for &y in touched.iter() {
            let v = scratch[y];
            if v < -1e-14 {
                return Err(Error::numeric(format!(
                    "full_chain: entry ({x},{y}) = {v:.3e} below −1e-14"
                )));
            }
            if v < 0.0 {
                scratch[y] = 0.0;
            }
            sum += scratch[y];
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::numeric(format!(
                "full_chain: row {x} sums to {sum}, not 1"
            )));
        }
        for &y in touched.iter() {
            scratch[y] /= sum;
        }
        Ok(())
    };

    if states <= DENSE_STATE_CAP {
        let mut m = nd::Array2::zeros((states, states));
        for x in 0..states {
            touched.clear();
            fill_row(x, &mut scratch, &mut touched)?;
            for &y in &touched {
                m[[x, y]] = scratch[y];
                scratch[y] = 0.0;
            }
        }
        Ok(ChainMatrix { space: Space::Full, n, storage: Storage::Dense(m) })
    } else {
        let mut row_ptr = Vec::with_capacity(states + 1);
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        row_ptr.push(0);
        for x in 0..states {
            touched.clear();
            fill_row(x, &mut scratch, &mut touched)?;
            touched.sort_unstable();
            for &y in &touched {
                if scratch[y] != 0.0 {
                    cols.push(y as u32);
                    vals.push(scratch[y]);
                }
                scratch[y] = 0.0;
            }
            row_ptr.push(cols.len());
        }
        Ok(ChainMatrix { space: Space::Full, n, storage: Storage::Csr { row_ptr, cols, vals } })
    }
}

fn check_weight_chain_n(n: usize) -> Result<()> {
    if !(2..=WEIGHT_CHAIN_MAX_N).contains(&n) {
        return Err(Error::invalid(format!(
            "weight chain: n = {n} outside 2..={WEIGHT_CHAIN_MAX_N}"
        )));
    }
    Ok(())
}

/// The zero chain on weight classes `{1, …, n}`:
/// `P(x,x−1) = 2x(x−1)/(5n(n−1))`, `P(x,x+1) = 6x(n−x)/(5n(n−1))`, and the
/// holding probability is the complement.
pub fn zero_chain(n: usize) -> Result<ChainMatrix> {
    check_weight_chain_n(n)?;
    let denom = 5.0 * (n * (n - 1)) as f64;
    let mut down = vec![0.0; n];
    let mut stay = vec![0.0; n];
    let mut up = vec![0.0; n];
    for idx in 0..n {
        let x = (idx + 1) as f64;
        let nf = n as f64;
        let dn = 2.0 * x * (x - 1.0) / denom;
        let upx = 6.0 * x * (nf - x) / denom;
        down[idx] = dn;
        up[idx] = upx;
        stay[idx] = 1.0 - dn - upx;
    }
    Ok(ChainMatrix { space: Space::Zero, n, storage: Storage::Tridiagonal { down, stay, up } })
}

/// The accelerated chain — the zero chain conditioned on moving:
/// `P(x,x−1) = (x−1)/(3n−2x−1)`, `P(x,x+1) = 3(n−x)/(3n−2x−1)`, zero
/// diagonal.
pub fn accelerated_chain(n: usize) -> Result<ChainMatrix> {
    check_weight_chain_n(n)?;
    let mut down = vec![0.0; n];
    let mut stay = vec![0.0; n];
    let mut up = vec![0.0; n];
    for idx in 0..n {
        let x = (idx + 1) as f64;
        let nf = n as f64;
        let denom = 3.0 * nf - 2.0 * x - 1.0;
        down[idx] = (x - 1.0) / denom;
        up[idx] = 3.0 * (nf - x) / denom;
        stay[idx] = 0.0;
    }
    Ok(ChainMatrix {
        space: Space::Accelerated,
        n,
        storage: Storage::Tridiagonal { down, stay, up },
    })
}

/// Stationary distribution `π₀(x) = 3^x C(n,x) / (4^n − 1)` of the zero
/// chain, built by the overflow-free ratio recurrence
/// `π₀(x+1)/π₀(x) = 3(n−x)/(x+1)` seeded at the mode.
pub fn zero_stationary(n: usize) -> Result<Distribution> {
    check_weight_chain_n(n)?;
    let mode = ((3 * (n + 1)) / 4).clamp(1, n);
    let mut w = vec![0.0f64; n];
    w[mode - 1] = 1.0;
    for x in mode..n {
        // ratio π(x+1)/π(x) at weight x
        let r = 3.0 * (n - x) as f64 / (x + 1) as f64;
        w[x] = w[x - 1] * r;
    }
    for x in (1..mode).rev() {
        // inverse ratio π(x)/π(x+1) at weight x
        let r = (x + 1) as f64 / (3.0 * (n - x) as f64);
        w[x - 1] = w[x] * r;
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(Distribution::from_raw(Space::Zero, n, w))
}

/// Compares the weight-class aggregation of a full chain against the zero
/// chain: for every state, transition mass into each destination weight
/// class is summed and checked against the zero-chain row of the state's
/// weight class. Returns the largest absolute deviation (reported, never
/// thrown).
pub fn lump_check(full: &ChainMatrix, n: usize) -> Result<f64> {
    if full.space() != Space::Full || full.n() != n {
        return Err(Error::invalid("lump_check: chain is not a full chain on n qubits"));
    }
    if n > 5 {
        return Err(Error::invalid(format!("lump_check: n = {n} exceeds the cap 5")));
    }
    let zero = zero_chain(n)?;
    let states = full.states();
    let weights: Vec<usize> = (0..states).map(|x| string_weight(x + 1)).collect();
    let mut worst = 0.0f64;
    let mut class_mass = vec![0.0f64; n];
    for x in 0..states {
        class_mass.fill(0.0);
        match &full.storage {
            Storage::Dense(m) => {
                for y in 0..states {
                    class_mass[weights[y] - 1] += m[[x, y]];
                }
            }
            Storage::Csr { row_ptr, cols, vals } => {
                for idx in row_ptr[x]..row_ptr[x + 1] {
                    class_mass[weights[cols[idx] as usize] - 1] += vals[idx];
                }
            }
            Storage::Tridiagonal { .. } => unreachable!("full chains are dense or CSR"),
        }
        let wx = weights[x];
        for (cls, &mass) in class_mass.iter().enumerate() {
            let expect = zero.entry(wx - 1, cls);
            worst = worst.max((mass - expect).abs());
        }
    }
    Ok(worst)
}

/// `init · P^t` by repeated multiplication; the matrix power is never
/// materialized.
pub fn iterate(chain: &ChainMatrix, init: &Distribution, t: usize) -> Result<Distribution> {
    if !init.matches(chain) {
        return Err(Error::invalid(format!(
            "iterate: distribution over {} (n={}) does not match chain over {} (n={})",
            init.space().name(),
            init.n(),
            chain.space().name(),
            chain.n()
        )));
    }
    let mut cur = init.weights().to_vec();
    let mut next = vec![0.0f64; cur.len()];
    for _ in 0..t {
        chain.apply_left(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Distribution::from_raw(chain.space(), chain.n(), cur))
}
