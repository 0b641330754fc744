//! Exact design-distance computation: the expected coefficient map, its
//! distance to the Haar twirl in 1-norm and 2-norm, and the diamond-norm
//! upper bound.
//!
//! The expected coefficient map `M` advances Pauli coefficients by one
//! circuit step in expectation: the average over ordered qubit pairs of the
//! embedded pair moment matrix. Its fixed space is spanned by the identity
//! coefficient and the uniform diagonal, so powers of `M` converge to the
//! Haar twirl target and the deviation norms measure how close the sampled
//! circuit ensemble is to a 2-design at a given depth.

use ndarray as nd;
use serde::Serialize;

use crate::moments::{ensemble_ghat, haar_ghat, EnsembleKind, GateEnsemble};
use crate::pauli::CoeffTensor;
use crate::simulate::{apply_pair_k1, apply_pair_k2, digit, pair_action, PairAction};
use crate::{Error, Result};

/// Cap on `n` for the k=1 expected map (coefficient space `4^n`).
pub const EXPECTED_MAP_K1_MAX_N: usize = 10;
/// Cap on `n` for the k=2 expected map (coefficient space `16^n`).
pub const EXPECTED_MAP_K2_MAX_N: usize = 5;
/// Largest coefficient-space dimension stored (or materialized) densely.
pub const DENSE_MAP_MAX_DIM: usize = 4096;
/// Cap on `n` for the diamond-norm upper bound (dense powering required).
pub const DIAMOND_MAX_N: usize = 3;

/// How the map's action is evaluated.
enum MapAction {
    /// No two-qubit pairs exist (n = 1): coefficients are unchanged.
    Identity,
    /// Explicit dense matrix on the full coefficient space.
    Dense(nd::Array2<f64>),
    /// Matrix-free pair-average action.
    PairAverage(PairAction),
    /// Closed-form Haar twirl target (k = 2 projector).
    Target,
}

/// The single-step expected coefficient map (or the Haar twirl target),
/// applied as a `t`-th power action.
pub struct ExpectedMap {
    n: usize,
    k: usize,
    dim: usize,
    ensemble: String,
    action: MapAction,
}

fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

impl ExpectedMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Coefficient-space dimension `(4^k)^n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ensemble(&self) -> &str {
        &self.ensemble
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.action, MapAction::Dense(_))
    }

    /// The stored dense matrix, if this map holds one.
    pub fn dense(&self) -> Option<&nd::Array2<f64>> {
        match &self.action {
            MapAction::Dense(m) => Some(m),
            _ => None,
        }
    }

    /// Single-step action `dst = M · src`. The identity coefficient is
    /// carried over exactly.
    fn apply_once(&self, src: &[f64], dst: &mut [f64], scratch: &mut [f64]) {
        match &self.action {
            MapAction::Identity => dst.copy_from_slice(src),
            MapAction::Dense(m) => {
                let v = m.dot(&nd::ArrayView1::from(src));
                dst.copy_from_slice(v.as_slice().expect("contiguous"));
                dst[0] = src[0];
            }
            MapAction::PairAverage(action) => {
                let pairs = ordered_pairs(self.n);
                let inv_p = 1.0 / pairs.len() as f64;
                dst.fill(0.0);
                for &(i, j) in &pairs {
                    scratch.copy_from_slice(src);
                    match self.k {
                        1 => apply_pair_k1(scratch, self.n, i, j, action),
                        _ => apply_pair_k2(scratch, self.n, i, j, action),
                    }
                    for (d, s) in dst.iter_mut().zip(scratch.iter()) {
                        *d += inv_p * s;
                    }
                }
                dst[0] = src[0];
            }
            MapAction::Target => {
                let block = 1usize << (2 * self.n);
                let mut diag_rest = 0.0;
                for p in 1..block {
                    diag_rest += src[p * block + p];
                }
                let uniform = diag_rest / (block as f64 - 1.0);
                dst.fill(0.0);
                dst[0] = src[0];
                for p in 1..block {
                    dst[p * block + p] = uniform;
                }
            }
        }
    }

    /// Applies the `t`-th power of the map to a coefficient tensor.
    pub fn apply(&self, init: &CoeffTensor, t: usize) -> Result<CoeffTensor> {
        if init.n() != self.n || init.k() != self.k {
            return Err(Error::invalid(format!(
                "expected map: tensor has n={}, k={}; map needs n={}, k={}",
                init.n(),
                init.k(),
                self.n,
                self.k
            )));
        }
        let mut cur = init.values().to_vec();
        if t == 0 {
            return CoeffTensor::from_values(self.n, self.k, cur);
        }
        // the target is a projector: one application reaches the limit
        let reps = if matches!(self.action, MapAction::Target | MapAction::Identity) {
            1
        } else {
            t
        };
        let mut next = vec![0.0; cur.len()];
        let mut scratch = vec![0.0; cur.len()];
        for _ in 0..reps {
            self.apply_once(&cur, &mut next, &mut scratch);
            std::mem::swap(&mut cur, &mut next);
        }
        CoeffTensor::from_values(self.n, self.k, cur)
    }

    /// Materializes the single-step map as a dense matrix (column by column
    /// for matrix-free actions).
    pub fn to_dense(&self) -> Result<nd::Array2<f64>> {
        if self.dim > DENSE_MAP_MAX_DIM {
            return Err(Error::invalid(format!(
                "expected map: dimension {} exceeds the dense cap {DENSE_MAP_MAX_DIM}",
                self.dim
            )));
        }
        if let MapAction::Dense(m) = &self.action {
            return Ok(m.clone());
        }
        let mut out = nd::Array2::zeros((self.dim, self.dim));
        let mut src = vec![0.0; self.dim];
        let mut dst = vec![0.0; self.dim];
        let mut scratch = vec![0.0; self.dim];
        for c in 0..self.dim {
            src[c] = 1.0;
            self.apply_once(&src, &mut dst, &mut scratch);
            for r in 0..self.dim {
                if dst[r] != 0.0 {
                    out[[r, c]] = dst[r];
                }
            }
            src[c] = 0.0;
        }
        Ok(out)
    }
}

/// Assembles the dense pair-average matrix from the pair moment matrix `g`
/// (16×16 for k=1, 256×256 for k=2).
fn assemble_dense(n: usize, k: usize, g: &nd::Array2<f64>) -> nd::Array2<f64> {
    let dim = 1usize << (2 * k * n);
    let block = 1usize << (2 * n);
    let pairs = ordered_pairs(n);
    let inv_p = 1.0 / pairs.len() as f64;
    let mut m = nd::Array2::zeros((dim, dim));
    for &(i, j) in &pairs {
        let si = 1usize << (2 * (n - 1 - i));
        let sj = 1usize << (2 * (n - 1 - j));
        let offset = |l: usize| -> usize {
            if k == 1 {
                (l >> 2) * si + (l & 3) * sj
            } else {
                let (l1, l2) = (l >> 4, l & 15);
                ((l1 >> 2) * si + (l1 & 3) * sj) * block + (l2 >> 2) * si + (l2 & 3) * sj
            }
        };
        for base in 0..dim {
            let clear = if k == 1 {
                digit(base, n, i) == 0 && digit(base, n, j) == 0
            } else {
                let (p1, p2) = (base / block, base % block);
                digit(p1, n, i) == 0
                    && digit(p1, n, j) == 0
                    && digit(p2, n, i) == 0
                    && digit(p2, n, j) == 0
            };
            if !clear {
                continue;
            }
            let labels = g.nrows();
            for ql in 0..labels {
                let row = g.row(ql);
                for pl in 0..labels {
                    let w = row[pl];
                    if w != 0.0 {
                        m[[base + offset(ql), base + offset(pl)]] += inv_p * w;
                    }
                }
            }
        }
    }
    // identity coefficient row and column are exact
    for c in 0..dim {
        m[[0, c]] = if c == 0 { 1.0 } else { 0.0 };
        m[[c, 0]] = if c == 0 { 1.0 } else { 0.0 };
    }
    m
}

/// Builds the single-step expected coefficient map for `k ∈ {1, 2}` copies:
/// dense when the coefficient space has at most [`DENSE_MAP_MAX_DIM`]
/// dimensions, matrix-free otherwise.
pub fn expected_coeff_map(n: usize, ens: &GateEnsemble, k: usize) -> Result<ExpectedMap> {
    if !(1..=2).contains(&k) {
        return Err(Error::invalid(format!("expected_coeff_map: k = {k} not in {{1, 2}}")));
    }
    let cap = if k == 1 { EXPECTED_MAP_K1_MAX_N } else { EXPECTED_MAP_K2_MAX_N };
    if n == 0 || n > cap {
        return Err(Error::invalid(format!(
            "expected_coeff_map: n = {n} outside 1..={cap} for k = {k}"
        )));
    }
    let dim = 1usize << (2 * k * n);
    let ensemble = ens.label().to_string();
    if n == 1 {
        return Ok(ExpectedMap { n, k, dim, ensemble, action: MapAction::Identity });
    }
    let action = if dim <= DENSE_MAP_MAX_DIM {
        let g = match ens.kind() {
            EnsembleKind::HaarU4 => haar_ghat(4, k)?.entries().clone(),
            EnsembleKind::Explicit => ensemble_ghat(ens, k)?.entries().clone(),
        };
        MapAction::Dense(assemble_dense(n, k, &g))
    } else {
        MapAction::PairAverage(pair_action(ens, k)?)
    };
    Ok(ExpectedMap { n, k, dim, ensemble, action })
}

/// The Haar 2-fold twirl on coefficients: fixes the identity, averages the
/// diagonal sector uniformly, kills the off-diagonal sector.
pub fn haar_twirl_target(n: usize) -> Result<ExpectedMap> {
    if n == 0 || n > EXPECTED_MAP_K2_MAX_N {
        return Err(Error::invalid(format!(
            "haar_twirl_target: n = {n} outside 1..={EXPECTED_MAP_K2_MAX_N}"
        )));
    }
    let dim = 1usize << (4 * n);
    Ok(ExpectedMap {
        n,
        k: 2,
        dim,
        ensemble: "haar-u4".to_string(),
        action: MapAction::Target,
    })
}

/// Which deviation target a two-copy initial tensor selects.
fn select_target(n: usize, init: &CoeffTensor) -> (&'static str, f64) {
    let block = 1usize << (2 * n);
    let mut diag_sum = 0.0;
    let mut diag_min = f64::INFINITY;
    let mut rest = 0.0;
    for p in 0..block {
        let v = init.values()[p * block + p];
        diag_sum += v;
        diag_min = diag_min.min(v);
        if p != 0 {
            rest += v;
        }
    }
    let d_sq = block as f64; // d² with d = 2^n
    if (diag_sum - 1.0).abs() <= 1e-12 && diag_min >= -1e-12 {
        let d = d_sq.sqrt();
        ("unit-sum", 1.0 / (d * (d + 1.0)))
    } else {
        ("general", rest / (d_sq - 1.0))
    }
}

/// Deviation sums of `M^t · init` from the diagonal target: returns
/// `(target label, l1, l2, max deviation)`.
fn design_deviations(
    n: usize,
    t: usize,
    ens: &GateEnsemble,
    init: &CoeffTensor,
) -> Result<(&'static str, f64, f64, f64)> {
    if init.n() != n || init.k() != 2 {
        return Err(Error::invalid(format!(
            "design deviation: init has n={}, k={}; need n={n}, k=2",
            init.n(),
            init.k()
        )));
    }
    let (label, target) = select_target(n, init);
    let map = expected_coeff_map(n, ens, 2)?;
    let evolved = map.apply(init, t)?;
    let block = 1usize << (2 * n);
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut max_dev = 0.0f64;
    for (idx, &v) in evolved.values().iter().enumerate() {
        if idx == 0 {
            continue;
        }
        let goal = if idx / block == idx % block { target } else { 0.0 };
        let dev = (v - goal).abs();
        l1 += dev;
        l2 += dev * dev;
        max_dev = max_dev.max(dev);
    }
    Ok((label, l1, l2, max_dev))
}

/// Quadratic deviation `Σ_{(p₁,p₂)≠(0,0)} (γ_t(p₁,p₂) − δ_{p₁p₂}·target)²`.
pub fn design_l2(n: usize, t: usize, ens: &GateEnsemble, init: &CoeffTensor) -> Result<f64> {
    design_deviations(n, t, ens, init).map(|(_, _, l2, _)| l2)
}

/// Absolute deviation `Σ_{(p₁,p₂)≠(0,0)} |γ_t(p₁,p₂) − δ_{p₁p₂}·target|`.
pub fn design_l1(n: usize, t: usize, ens: &GateEnsemble, init: &CoeffTensor) -> Result<f64> {
    design_deviations(n, t, ens, init).map(|(_, l1, _, _)| l1)
}

/// `t`-th power of a dense matrix by repeated squaring.
fn matrix_power(m: &nd::Array2<f64>, t: usize) -> nd::Array2<f64> {
    let dim = m.nrows();
    if t == 0 {
        return nd::Array2::from_diag_elem(dim, 1.0);
    }
    let mut result: Option<nd::Array2<f64>> = None;
    let mut base = m.clone();
    let mut e = t;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.dot(&base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = base.dot(&base);
    }
    result.expect("t ≥ 1")
}

/// Diamond-norm upper bound `2^{2n} · max_{(p₁,p₂)≠(0,0)} ‖M^t e_c −
/// target e_c‖₂` (an upper bound only, never the exact diamond norm).
pub fn diamond_bound(n: usize, t: usize, ens: &GateEnsemble) -> Result<f64> {
    if n == 0 || n > DIAMOND_MAX_N {
        return Err(Error::invalid(format!(
            "diamond_bound: n = {n} outside 1..={DIAMOND_MAX_N}"
        )));
    }
    let map = expected_coeff_map(n, ens, 2)?;
    let dense = map.to_dense()?;
    let powered = matrix_power(&dense, t);
    let dim = map.dim();
    let block = 1usize << (2 * n);
    let uniform = 1.0 / (block as f64 - 1.0);
    let mut max_norm = 0.0f64;
    for c in 1..dim {
        let diag_col = c / block == c % block;
        let mut sq = 0.0;
        for r in 0..dim {
            let goal = if diag_col && r / block == r % block && r != 0 { uniform } else { 0.0 };
            let dev = powered[[r, c]] - goal;
            sq += dev * dev;
        }
        max_norm = max_norm.max(sq.sqrt());
    }
    Ok((1usize << (2 * n)) as f64 * max_norm)
}

/// Design-distance report for one `(n, t, ensemble)` triple.
#[derive(Clone, Debug, Serialize)]
pub struct DesignReport {
    pub n: usize,
    pub t: usize,
    pub ensemble: String,
    /// Which deviation normalization the initial data selected.
    pub target: String,
    pub l1: f64,
    pub l2: f64,
    pub diamond_upper_bound: f64,
}

/// Assembles the full report (requires `n ≤ 3` for the diamond bound).
pub fn design_report(
    n: usize,
    t: usize,
    ens: &GateEnsemble,
    init: &CoeffTensor,
) -> Result<DesignReport> {
    let (label, l1, l2, _) = design_deviations(n, t, ens, init)?;
    let diamond = diamond_bound(n, t, ens)?;
    Ok(DesignReport {
        n,
        t,
        ensemble: ens.label().to_string(),
        target: label.to_string(),
        l1,
        l2,
        diamond_upper_bound: diamond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{full_chain, iterate, Distribution, Space};
    use crate::pauli::{expand_pauli, DenseOperator};
    use num_complex::Complex64 as C64;

    fn pure_product_tensor(n: usize) -> CoeffTensor {
        let rho = DenseOperator::zero_state(n).unwrap();
        expand_pauli(&rho, n, 1).unwrap().two_copy_product().unwrap()
    }

    fn cnot_ensemble() -> GateEnsemble {
        let mut m = nd::Array2::from_elem((4, 4), C64::new(0.0, 0.0));
        for (col, row) in [(0usize, 0usize), (1, 1), (2, 3), (3, 2)] {
            m[[row, col]] = C64::new(1.0, 0.0);
        }
        GateEnsemble::single(m, "cnot").unwrap()
    }

    #[test]
    fn target_closed_form_at_one_qubit() {
        let target = haar_twirl_target(1).unwrap();
        let dense = target.to_dense().unwrap();
        for c in 0..16 {
            for r in 0..16 {
                let expected = if c == 0 && r == 0 {
                    1.0
                } else if c % 5 == 0 && c != 0 && r % 5 == 0 && r != 0 {
                    // diagonal labels (p,p) are multiples of 5 in base 16
                    1.0 / 3.0
                } else {
                    0.0
                };
                assert!(
                    (dense[[r, c]] - expected).abs() < 1e-15,
                    "entry ({r},{c}) = {}",
                    dense[[r, c]]
                );
            }
        }
    }

    #[test]
    fn target_is_projector_and_preserves_identity() {
        let target = haar_twirl_target(2).unwrap();
        let init = pure_product_tensor(2);
        let once = target.apply(&init, 1).unwrap();
        let twice = target.apply(&once, 1).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(once.values()[0], init.values()[0]);
    }

    #[test]
    fn n2_haar_map_is_the_pair_moment_matrix() {
        let map = expected_coeff_map(2, &GateEnsemble::haar_u4(), 2).unwrap();
        let dense = map.dense().expect("dense at n=2");
        let ghat = haar_ghat(4, 2).unwrap();
        let mut dev = 0.0f64;
        for r in 0..256 {
            for c in 0..256 {
                dev = dev.max((dense[[r, c]] - ghat.entries()[[r, c]]).abs());
            }
        }
        assert!(dev < 1e-15, "max deviation {dev}");
        // projector: applying twice equals applying once
        let sq = dense.dot(dense);
        let pdev = (&sq - dense).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(pdev < 1e-12, "projector residue {pdev}");
        // identity column exact
        for r in 0..256 {
            assert_eq!(dense[[r, 0]], if r == 0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let init = pure_product_tensor(2);
        let map = expected_coeff_map(2, &GateEnsemble::haar_u4(), 2).unwrap();
        let out = map.apply(&init, 0).unwrap();
        for (a, b) in out.values().iter().zip(init.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn map_preserves_identity_and_diagonal_mass() {
        let n = 3usize;
        let init = pure_product_tensor(n);
        let map = expected_coeff_map(n, &GateEnsemble::haar_u4(), 2).unwrap();
        let block = 1usize << (2 * n);
        let mass = |t: &CoeffTensor| -> f64 {
            (0..block).map(|p| t.values()[p * block + p]).sum()
        };
        let before = mass(&init);
        let out = map.apply(&init, 5).unwrap();
        assert_eq!(out.values()[0], init.values()[0]);
        assert!((mass(&out) - before).abs() < 1e-12);
    }

    #[test]
    fn matrix_free_action_matches_dense() {
        // force the matrix-free path at a size where the dense map exists
        let n = 3usize;
        let ens = GateEnsemble::haar_u4();
        let dense_map = expected_coeff_map(n, &ens, 2).unwrap();
        let free_map = ExpectedMap {
            n,
            k: 2,
            dim: dense_map.dim(),
            ensemble: "haar-u4".into(),
            action: MapAction::PairAverage(pair_action(&ens, 2).unwrap()),
        };
        let init = pure_product_tensor(n);
        let a = dense_map.apply(&init, 3).unwrap();
        let b = free_map.apply(&init, 3).unwrap();
        let dev = a
            .values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(dev < 1e-12, "dense vs matrix-free deviation {dev}");
        // same check for an explicit ensemble at k=1
        let cnot = cnot_ensemble();
        let dense1 = expected_coeff_map(3, &cnot, 1).unwrap();
        let free1 = ExpectedMap {
            n: 3,
            k: 1,
            dim: 64,
            ensemble: "cnot".into(),
            action: MapAction::PairAverage(pair_action(&cnot, 1).unwrap()),
        };
        let g0 = expand_pauli(&DenseOperator::zero_state(3).unwrap(), 3, 1).unwrap();
        let x = dense1.apply(&g0, 4).unwrap();
        let y = free1.apply(&g0, 4).unwrap();
        let dev1 = x
            .values()
            .iter()
            .zip(y.values())
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        assert!(dev1 < 1e-12, "k=1 deviation {dev1}");
    }

    #[test]
    fn diagonal_marginal_matches_full_chain() {
        let n = 3usize;
        let ghat = haar_ghat(4, 2).unwrap();
        let chain = full_chain(n, &ghat).unwrap();
        let map = expected_coeff_map(n, &GateEnsemble::haar_u4(), 2).unwrap();
        let dense = map.dense().unwrap();
        let block = 1usize << (2 * n);
        let mut dev = 0.0f64;
        for p in 1..block {
            for q in 1..block {
                let m_entry = dense[[q * block + q, p * block + p]];
                let c_entry = chain.entry(p - 1, q - 1);
                dev = dev.max((m_entry - c_entry).abs());
            }
        }
        assert!(dev < 1e-13, "diagonal marginal deviation {dev}");
    }

    #[test]
    fn convergence_rate_bounded_by_second_modulus() {
        // At n=2 the Haar map is already the projector: one step lands on
        // the target exactly.
        let map2 = expected_coeff_map(2, &GateEnsemble::haar_u4(), 2).unwrap();
        let t2 = haar_twirl_target(2).unwrap().to_dense().unwrap();
        let d2 = map2.dense().unwrap();
        let one_step = (&d2.dot(d2) - &t2).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(one_step < 1e-12, "n=2 one-step deviation {one_step}");
        // At n=3, deviations of evolved vectors shrink by at least the full
        // chain's second eigenvalue each step (the slowest sector).
        let n = 3usize;
        let map = expected_coeff_map(n, &GateEnsemble::haar_u4(), 2).unwrap();
        let target = haar_twirl_target(n).unwrap();
        let chain = full_chain(n, &haar_ghat(4, 2).unwrap()).unwrap();
        let (gap, _) = crate::spectral::eigen_gap(&chain).unwrap();
        let lambda2 = 1.0 - gap;
        let init = pure_product_tensor(n);
        let limit = target.apply(&init, 1).unwrap();
        let mut prev: Option<f64> = None;
        for t in 0..8 {
            let cur = map.apply(&init, t).unwrap();
            let norm = cur
                .values()
                .iter()
                .zip(limit.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if let Some(p) = prev {
                assert!(
                    norm <= p * (lambda2 + 1e-8) + 1e-15,
                    "t={t}: norm {norm} vs previous {p} × λ₂ {lambda2}"
                );
            }
            prev = Some(norm);
        }
    }

    #[test]
    fn design_norms_vanish_after_one_step_at_n2() {
        let init = pure_product_tensor(2);
        let ens = GateEnsemble::haar_u4();
        let l1 = design_l1(2, 1, &ens, &init).unwrap();
        let l2 = design_l2(2, 1, &ens, &init).unwrap();
        assert!(l1 < 1e-12, "l1 = {l1}");
        assert!(l2 < 1e-12, "l2 = {l2}");
        assert!(design_l1(2, 0, &ens, &init).unwrap() > 0.1);
        assert!(design_l2(2, 0, &ens, &init).unwrap() > 0.1);
    }

    #[test]
    fn design_l1_monotone_for_haar() {
        let n = 3usize;
        let init = pure_product_tensor(n);
        let ens = GateEnsemble::haar_u4();
        let mut prev = f64::INFINITY;
        for t in 0..6 {
            let v = design_l1(n, t, &ens, &init).unwrap();
            assert!(v <= prev + 1e-12, "t={t}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn norm_inequality_holds_termwise() {
        let n = 3usize;
        let init = pure_product_tensor(n);
        let ens = GateEnsemble::haar_u4();
        for t in [0usize, 1, 2, 4] {
            let (_, l1, l2, max_dev) = design_deviations(n, t, &ens, &init).unwrap();
            assert!(l2 <= l1 * max_dev + 1e-15, "t={t}: {l2} > {l1}·{max_dev}");
        }
    }

    #[test]
    fn target_labels_select_by_initial_data() {
        // pure product state: unit diagonal sum
        let init = pure_product_tensor(2);
        let (label, value) = select_target(2, &init);
        assert_eq!(label, "unit-sum");
        assert!((value - 1.0 / 20.0).abs() < 1e-15);
        // maximally mixed two-copy data: no non-identity diagonal mass at
        // all, so the general target is zero and the state is already fixed
        let mixed = DenseOperator::maximally_mixed(2).unwrap();
        let t = expand_pauli(&mixed, 2, 1).unwrap().two_copy_product().unwrap();
        let (label, value) = select_target(2, &t);
        assert_eq!(label, "general");
        assert!(value.abs() < 1e-15);
        let l1 = design_l1(2, 1, &GateEnsemble::haar_u4(), &t).unwrap();
        assert!(l1 < 1e-12, "general-target l1 after one step: {l1}");
        // a half-pure mixture has purity 7/16: general target, positive,
        // and still a fixed point after one Haar step
        let pure = DenseOperator::zero_state(2).unwrap();
        let blend = nd::Array2::from_shape_fn((4, 4), |(r, c)| {
            0.5 * pure.entries()[[r, c]] + 0.5 * mixed.entries()[[r, c]]
        });
        let rho = DenseOperator::new(blend).unwrap();
        let tb = expand_pauli(&rho, 2, 1).unwrap().two_copy_product().unwrap();
        let (label, value) = select_target(2, &tb);
        assert_eq!(label, "general");
        assert!((value - 0.1875 / 15.0).abs() < 1e-12, "value {value}");
        let l1 = design_l1(2, 1, &GateEnsemble::haar_u4(), &tb).unwrap();
        assert!(l1 < 1e-12, "blend l1 after one step: {l1}");
    }

    #[test]
    fn diamond_bound_values() {
        let ens = GateEnsemble::haar_u4();
        // n=1: map is vacuous, worst column is an off-diagonal unit vector
        let d10 = diamond_bound(1, 0, &ens).unwrap();
        assert!((d10 - 4.0).abs() < 1e-12, "n=1 t=0: {d10}");
        // n=2 t=0: identity-vs-twirl, worst column again deviation 1
        let d20 = diamond_bound(2, 0, &ens).unwrap();
        assert!((d20 - 16.0).abs() < 1e-12, "n=2 t=0: {d20}");
        // n=2 t=1: exact twirl reached
        let d21 = diamond_bound(2, 1, &ens).unwrap();
        assert!(d21 < 1e-10, "n=2 t=1: {d21}");
        // non-negative and non-increasing in t
        let mut prev = f64::INFINITY;
        for t in 0..4 {
            let v = diamond_bound(3, t, &ens).unwrap();
            assert!(v >= 0.0 && v <= prev + 1e-10, "t={t}: {v} vs {prev}");
            prev = v;
        }
    }

    #[test]
    fn caps_and_validation() {
        let ens = GateEnsemble::haar_u4();
        assert!(expected_coeff_map(0, &ens, 2).is_err());
        assert!(expected_coeff_map(6, &ens, 2).is_err());
        assert!(expected_coeff_map(11, &ens, 1).is_err());
        assert!(expected_coeff_map(2, &ens, 3).is_err());
        assert!(haar_twirl_target(6).is_err());
        assert!(diamond_bound(4, 1, &ens).is_err());
        let init = pure_product_tensor(2);
        assert!(design_l1(3, 1, &ens, &init).is_err());
        let map = expected_coeff_map(2, &ens, 2).unwrap();
        let k1 = expand_pauli(&DenseOperator::zero_state(2).unwrap(), 2, 1).unwrap();
        assert!(map.apply(&k1, 1).is_err());
    }

    #[test]
    fn report_assembles_and_serializes() {
        let init = pure_product_tensor(2);
        let report = design_report(2, 1, &GateEnsemble::haar_u4(), &init).unwrap();
        assert_eq!(report.n, 2);
        assert_eq!(report.t, 1);
        assert_eq!(report.ensemble, "haar-u4");
        assert_eq!(report.target, "unit-sum");
        assert!(report.l1 < 1e-12 && report.l2 < 1e-12);
        assert!(report.diamond_upper_bound < 1e-10);
        let json = serde_json::to_string(&report).unwrap();
        for key in ["\"n\"", "\"t\"", "\"ensemble\"", "\"target\"", "\"l1\"", "\"l2\"", "\"diamond_upper_bound\""] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
    }

    #[test]
    fn k1_map_matches_chain_semantics() {
        // Haar k=1 on n=2: the only surviving coefficient is the identity
        let map = expected_coeff_map(2, &GateEnsemble::haar_u4(), 1).unwrap();
        let dense = map.dense().unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let expected = if r == 0 && c == 0 { 1.0 } else { 0.0 };
                assert!((dense[[r, c]] - expected).abs() < 1e-15);
            }
        }
        // CNOT k=1 map: identity column exact, columns preserve total mass
        let map_c = expected_coeff_map(2, &cnot_ensemble(), 1).unwrap();
        let dense_c = map_c.dense().unwrap();
        for r in 0..16 {
            assert_eq!(dense_c[[r, 0]], if r == 0 { 1.0 } else { 0.0 });
        }
        // evolve the zero-state coefficients and check the chain marginal:
        // diag weights under the k=2 map iterate like the full chain
        let n = 2usize;
        let ghat = haar_ghat(4, 2).unwrap();
        let chain = full_chain(n, &ghat).unwrap();
        let init = pure_product_tensor(n);
        let block = 1usize << (2 * n);
        let weights: Vec<f64> = (1..block)
            .map(|p| init.values()[p * block + p])
            .collect();
        let total: f64 = weights.iter().sum();
        let mu = Distribution::from_weights(
            Space::Full,
            n,
            weights.iter().map(|w| w / total).collect(),
        )
        .unwrap();
        let map2 = expected_coeff_map(n, &GateEnsemble::haar_u4(), 2).unwrap();
        let evolved = map2.apply(&init, 3).unwrap();
        let iterated = iterate(&chain, &mu, 3).unwrap();
        for p in 1..block {
            let a = evolved.values()[p * block + p] / total;
            let b = iterated.weights()[p - 1];
            assert!((a - b).abs() < 1e-12, "state {p}: {a} vs {b}");
        }
    }
}
