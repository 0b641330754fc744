//! Pauli-basis algebra.
//!
//! An operator on `nk` qubits is expanded as
//! `rho = 2^{-nk/2} Σ_{p⃗} γ(p⃗) σ_{p⃗}` with `γ(p⃗) = 2^{-nk/2} tr(σ_{p⃗} rho)`,
//! where `p⃗` runs over k-tuples of length-n Pauli words and
//! `σ_{p⃗} = σ_{p₁} ⊗ … ⊗ σ_{p_k}`. Coefficients of Hermitian operators are
//! real; the squares of the coefficients sum to `tr(rho²)`.
//!
//! Pauli words are indexed as base-4 integers with the most significant digit
//! on qubit 1, matching the tensor-product convention where the first factor
//! is the most significant block of the matrix index.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Cap on total qubit count `nk` for dense-operator work (4096×4096).
pub const MAX_TOTAL_QUBITS: usize = 12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// The four single-qubit Pauli matrices `σ₀=I, σ₁=X, σ₂=Y, σ₃=Z` as 2×2 rows.
pub const PAULI_1Q: [[[C64; 2]; 2]; 4] = [
    [[ONE, ZERO], [ZERO, ONE]],
    [[ZERO, ONE], [ONE, ZERO]],
    [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]],
    [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]],
];

/// A length-n word over `{0,1,2,3}` labelling `σ_{p₁} ⊗ … ⊗ σ_{p_n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    idx: usize,
}

impl PauliString {
    /// Builds from the base-4 index (most significant digit = qubit 1).
    pub fn new(n: usize, idx: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("PauliString: n must be ≥ 1"));
        }
        if idx >= 1usize << (2 * n) {
            return Err(Error::invalid(format!(
                "PauliString: index {idx} out of range for n={n}"
            )));
        }
        Ok(PauliString { n, idx })
    }

    /// Builds from explicit letters, `letters[0]` acting on qubit 1.
    pub fn from_letters(letters: &[u8]) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::invalid("PauliString: empty letter sequence"));
        }
        let mut idx = 0usize;
        for &l in letters {
            if l > 3 {
                return Err(Error::invalid(format!("PauliString: letter {l} not in 0..=3")));
            }
            idx = (idx << 2) | l as usize;
        }
        Ok(PauliString { n: letters.len(), idx })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> usize {
        self.idx
    }

    /// Letter on qubit `q` (0-based).
    pub fn letter(&self, q: usize) -> u8 {
        ((self.idx >> (2 * (self.n - 1 - q))) & 3) as u8
    }

    pub fn letters(&self) -> Vec<u8> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (0..self.n).filter(|&q| self.letter(q) != 0).count()
    }

    pub fn is_identity(&self) -> bool {
        self.idx == 0
    }

    /// The dense `2^n × 2^n` matrix `σ_{p₁} ⊗ … ⊗ σ_{p_n}`.
    pub fn matrix(&self) -> nd::Array2<C64> {
        let dim = 1usize << self.n;
        let mut m = nd::Array2::from_elem((dim, dim), ZERO);
        // Each row of a Pauli word matrix has exactly one nonzero entry.
        for r in 0..dim {
            let mut c = 0usize;
            let mut v = ONE;
            for q in 0..self.n {
                let rb = (r >> (self.n - 1 - q)) & 1;
                let p = self.letter(q) as usize;
                let (cb, f) = match (p, rb) {
                    (0, b) => (b, ONE),
                    (1, b) => (1 - b, ONE),
                    (2, 0) => (1, C64::new(0.0, -1.0)),
                    (2, _) => (0, I),
                    (3, 0) => (0, ONE),
                    (3, _) => (1, C64::new(-1.0, 0.0)),
                    _ => unreachable!(),
                };
                c = (c << 1) | cb;
                v *= f;
            }
            m[[r, c]] = v;
        }
        m
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for q in 0..self.n {
            f.write_str(match self.letter(q) {
                0 => "I",
                1 => "X",
                2 => "Y",
                3 => "Z",
                _ => unreachable!(),
            })?;
        }
        Ok(())
    }
}

/// Real Pauli coefficients of an operator on `(C^{2^n})^{⊗k}`, stored flat
/// with tuple index `p₁·4^{n(k−1)} + … + p_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTensor {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl CoeffTensor {
    pub fn zeros(n: usize, k: usize) -> Result<Self> {
        check_caps(n, k)?;
        Ok(CoeffTensor { n, k, values: vec![0.0; 1usize << (2 * n * k)] })
    }

    pub fn from_values(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        check_caps(n, k)?;
        if values.len() != 1usize << (2 * n * k) {
            return Err(Error::invalid(format!(
                "CoeffTensor: expected 4^{} = {} values, got {}",
                n * k,
                1usize << (2 * n * k),
                values.len()
            )));
        }
        Ok(CoeffTensor { n, k, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flat index of a k-tuple of Pauli-word indices.
    pub fn flat(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.k);
        let block = 2 * self.n;
        tuple.iter().fold(0usize, |acc, &p| (acc << block) | p)
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.values[self.flat(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], v: f64) {
        let f = self.flat(tuple);
        self.values[f] = v;
    }

    /// Σ γ² — equals `tr(rho²)` for the expansion of `rho`.
    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Outer product: coefficients of `rho ⊗ rho` from those of `rho` (k=1 → k=2).
    pub fn two_copy_product(&self) -> Result<CoeffTensor> {
        if self.k != 1 {
            return Err(Error::invalid("two_copy_product: input must have k=1"));
        }
        let mut out = CoeffTensor::zeros(self.n, 2)?;
        let len = self.values.len();
        for a in 0..len {
            let va = self.values[a];
            if va == 0.0 {
                continue;
            }
            let row = &mut out.values[a * len..(a + 1) * len];
            for (r, &vb) in row.iter_mut().zip(&self.values) {
                *r = va * vb;
            }
        }
        Ok(out)
    }
}

/// A dense complex operator on a power-of-two dimension.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    qubits: usize,
    entries: nd::Array2<C64>,
}

impl DenseOperator {
    pub fn new(entries: nd::Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::invalid(format!("DenseOperator: matrix is {r}×{c}, not square")));
        }
        if r == 0 || !r.is_power_of_two() {
            return Err(Error::invalid(format!(
                "DenseOperator: dimension {r} is not a positive power of 2"
            )));
        }
        let qubits = r.trailing_zeros() as usize;
        if qubits > MAX_TOTAL_QUBITS {
            return Err(Error::invalid(format!(
                "DenseOperator: {qubits} qubits exceeds cap {MAX_TOTAL_QUBITS}"
            )));
        }
        Ok(DenseOperator { qubits, entries })
    }

    /// `|0…0⟩⟨0…0|` on n qubits.
    pub fn zero_state(n: usize) -> Result<Self> {
        let dim = checked_dim(n)?;
        let mut m = nd::Array2::from_elem((dim, dim), ZERO);
        m[[0, 0]] = ONE;
        DenseOperator::new(m)
    }

    /// `I / 2^n` on n qubits.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        let dim = checked_dim(n)?;
        let m = nd::Array2::from_diag_elem(dim, C64::new(1.0 / dim as f64, 0.0));
        DenseOperator::new(m)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.qubits
    }

    pub fn entries(&self) -> &nd::Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> nd::Array2<C64> {
        self.entries
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn checked_dim(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_TOTAL_QUBITS {
        return Err(Error::invalid(format!("qubit count {n} outside 1..={MAX_TOTAL_QUBITS}")));
    }
    Ok(1usize << n)
}

fn check_caps(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::invalid(format!("k must be 1 or 2, got {k}")));
    }
    if n * k > MAX_TOTAL_QUBITS {
        return Err(Error::invalid(format!(
            "nk = {} exceeds the dense cap {MAX_TOTAL_QUBITS}",
            n * k
        )));
    }
    Ok(())
}

// Per-qubit change of basis between matrix-entry pairs e = 2·row_bit + col_bit
// and Pauli digits d: B[d][e] = σ_d[row][col].
const B_FWD: [[C64; 4]; 4] = [
    [ONE, ZERO, ZERO, ONE],
    [ZERO, ONE, ONE, ZERO],
    [ZERO, C64::new(0.0, -1.0), I, ZERO],
    [ONE, ZERO, ZERO, C64::new(-1.0, 0.0)],
];

fn b_transposed() -> [[C64; 4]; 4] {
    let mut t = [[ZERO; 4]; 4];
    for d in 0..4 {
        for e in 0..4 {
            t[e][d] = B_FWD[d][e];
        }
    }
    t
}

/// One radix-4 pass over axis `t` of an `m`-axis tensor of side 4.
fn apply_axis(a: &mut [C64], m: usize, t: usize, mat: &[[C64; 4]; 4]) {
    let stride = 1usize << (2 * (m - 1 - t));
    let block = stride * 4;
    let mut base = 0;
    while base < a.len() {
        for off in base..base + stride {
            let v = [a[off], a[off + stride], a[off + 2 * stride], a[off + 3 * stride]];
            for (d, row) in mat.iter().enumerate() {
                a[off + d * stride] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
        base += block;
    }
}

/// Expands `rho` (an operator on `(C^{2^n})^{⊗k}`) in the Pauli basis:
/// `γ(p⃗) = 2^{-nk/2} tr(σ_{p⃗} rho)`.
///
/// Fails with `InvalidInput` on a dimension mismatch and with `Numeric` when
/// the imaginary residue of any coefficient reaches 1e-9 (non-Hermitian
/// input). For Hermitian inputs the residue stays below 1e-12.
pub fn expand_pauli(rho: &DenseOperator, n: usize, k: usize) -> Result<CoeffTensor> {
    check_caps(n, k)?;
    let m = n * k;
    if rho.qubits() != m {
        return Err(Error::invalid(format!(
            "rho: dimension {} does not match 2^(n·k) = {} for n={n}, k={k}",
            rho.dim(),
            1usize << m
        )));
    }
    let dim = 1usize << m;
    let mut a = vec![ZERO; dim * dim];
    // Pack rho[j][i] at the per-qubit pair digits e_t = 2·i_t + j_t, where
    // (i, j) are the row/column of σ in tr(σ rho) = Σ σ[i][j]·rho[j][i].
    for j in 0..dim {
        let row = rho.entries.row(j);
        for i in 0..dim {
            let mut w = 0usize;
            for t in 0..m {
                let ib = (i >> (m - 1 - t)) & 1;
                let jb = (j >> (m - 1 - t)) & 1;
                w = (w << 2) | (2 * ib + jb);
            }
            a[w] = row[i];
        }
    }
    for t in 0..m {
        apply_axis(&mut a, m, t, &B_FWD);
    }
    let scale = 0.5f64.powi(m as i32).sqrt();
    let mut max_imag = 0.0f64;
    let values: Vec<f64> = a
        .iter()
        .map(|z| {
            max_imag = max_imag.max(z.im.abs() * scale);
            z.re * scale
        })
        .collect();
    if max_imag >= 1e-9 {
        return Err(Error::numeric(format!(
            "expand_pauli: imaginary residue {max_imag:.3e} ≥ 1e-9 (input not Hermitian)"
        )));
    }
    CoeffTensor::from_values(n, k, values)
}

/// Inverse of [`expand_pauli`]: `rho = 2^{-nk/2} Σ γ(p⃗) σ_{p⃗}`.
pub fn reconstruct(coeffs: &CoeffTensor) -> Result<DenseOperator> {
    let m = coeffs.n * coeffs.k;
    let dim = 1usize << m;
    let mut a: Vec<C64> = coeffs.values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let bt = b_transposed();
    for t in 0..m {
        apply_axis(&mut a, m, t, &bt);
    }
    let scale = C64::new(0.5f64.powi(m as i32).sqrt(), 0.0);
    let mut out = nd::Array2::from_elem((dim, dim), ZERO);
    for r in 0..dim {
        for c in 0..dim {
            let mut w = 0usize;
            for t in 0..m {
                let rb = (r >> (m - 1 - t)) & 1;
                let cb = (c >> (m - 1 - t)) & 1;
                w = (w << 2) | (2 * rb + cb);
            }
            out[[r, c]] = a[w] * scale;
        }
    }
    DenseOperator::new(out)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &nd::Array2<C64>, b: &nd::Array2<C64>) -> nd::Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = nd::Array2::from_elem((ar * br, ac * bc), ZERO);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            let mut block = out.slice_mut(nd::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.assign(&b.mapv(|v| v * aij));
        }
    }
    out
}

/// The swap operator `F|i,j⟩ = |j,i⟩` on `C^d ⊗ C^d`; `d` must be a power of
/// two ≥ 2. Satisfies `F = (1/d) Σ_p σ_p ⊗ σ_p` over the d-dimensional Pauli
/// basis and `F² = I`.
pub fn swap_matrix(d: usize) -> Result<DenseOperator> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::invalid(format!("swap_matrix: d = {d} is not a power of two ≥ 2")));
    }
    let m = 2 * d.trailing_zeros() as usize;
    if m > MAX_TOTAL_QUBITS {
        return Err(Error::invalid(format!("swap_matrix: d = {d} exceeds the dense cap")));
    }
    let dim = d * d;
    let mut f = nd::Array2::from_elem((dim, dim), ZERO);
    for i in 0..d {
        for j in 0..d {
            // column |i,j⟩ maps to row |j,i⟩.
            f[[j * d + i, i * d + j]] = ONE;
        }
    }
    DenseOperator::new(f)
}

/// `tr(P_π (A₁ ⊗ … ⊗ A_c))` for a permutation `π` of `{0,…,c−1}`, where
/// `P_π` moves tensor slot t to slot π(t).
///
/// Evaluated two independent ways — brute-force index contraction and the
/// cycle-factored product of matrix traces — and checked to agree within
/// 1e-10 (relative to scale) before the product-trace value is returned.
pub fn permutation_trace(perm: &[usize], mats: &[nd::Array2<C64>]) -> Result<C64> {
    let c = perm.len();
    if c == 0 || mats.len() != c {
        return Err(Error::invalid(format!(
            "permutation_trace: permutation length {c} does not match {} matrices",
            mats.len()
        )));
    }
    let mut seen = vec![false; c];
    for &p in perm {
        if p >= c || seen[p] {
            return Err(Error::invalid("permutation_trace: not a permutation of 0..c"));
        }
        seen[p] = true;
    }
    let dim = mats[0].nrows();
    for (t, mat) in mats.iter().enumerate() {
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::invalid(format!(
                "permutation_trace: matrix {t} is {}×{}, expected {dim}×{dim}",
                mat.nrows(),
                mat.ncols()
            )));
        }
    }
    let states = (dim as f64).powi(c as i32);
    if states > 2e7 {
        return Err(Error::invalid(format!(
            "permutation_trace: dim^c = {states:.1e} exceeds the contraction cap"
        )));
    }

    // Route 1: cycle-factored product of traces. For each cycle starting at
    // its smallest element s, the factor is tr(A_{π^{L−1}(s)} ··· A_{π(s)} A_s).
    let mut visited = vec![false; c];
    let mut product = ONE;
    for s in 0..c {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let mut acc = mats[s].clone();
        let mut x = perm[s];
        while x != s {
            visited[x] = true;
            acc = mats[x].dot(&acc);
            x = perm[x];
        }
        let tr = acc.diag().sum();
        product *= tr;
    }

    // Route 2: brute-force contraction
    //   Σ_{i⃗} Π_t A_t[i_{π(t)}, i_t]
    // (the matrix element of P_π (⊗A) at the diagonal, summed).
    let total = states as usize;
    let mut contraction = ZERO;
    let mut idx = vec![0usize; c];
    for flat in 0..total {
        let mut rem = flat;
        for t in (0..c).rev() {
            idx[t] = rem % dim;
            rem /= dim;
        }
        let mut term = ONE;
        for t in 0..c {
            term *= mats[t][[idx[perm[t]], idx[t]]];
            if term == ZERO {
                break;
            }
        }
        contraction += term;
    }

    let scale = 1.0f64.max(product.norm()).max(contraction.norm());
    if (product - contraction).norm() > 1e-10 * scale {
        return Err(Error::numeric(format!(
            "permutation_trace: evaluation routes disagree ({product} vs {contraction})"
        )));
    }
    Ok(product)
}
