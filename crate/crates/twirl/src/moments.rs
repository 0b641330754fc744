//! Moment operators for two-qubit gate ensembles.
//!
//! For a weighted ensemble `{(w_i, U_i)}` of 4×4 unitaries, the first- and
//! second-moment operators in the normalized Pauli basis are
//!
//! `Ĝ(q⃗; p⃗) = Σ_i w_i · d^{-k} · Π_j tr(σ_{q_j} U_i σ_{p_j} U_i†)`
//!
//! with `d = 4` and `k ∈ {1, 2}` copies, alongside the raw moment matrix
//! `G = Σ_i w_i U_i^{⊗k} ⊗ (U_i*)^{⊗k}`. The Haar average has the closed
//! forms implemented by [`haar_ghat`]. An ensemble is k-copy gapped when `G`
//! has exactly `k!` unit-modulus eigenvalues and the rest sit strictly below
//! 1 in modulus; [`gap_report`] measures this.

use std::collections::HashMap;
use std::sync::OnceLock;

use ndarray as nd;
use ndarray_linalg::EigVals;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::pauli::{kron, PauliString};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Number of elements of the two-qubit Clifford group modulo global phase.
pub const CLIFFORD2_SIZE: usize = 11520;

/// Source of a gate ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnsembleKind {
    /// The Haar measure on U(4), handled symbolically via closed forms.
    HaarU4,
    /// A finite weighted set of explicit 4×4 unitaries.
    Explicit,
}

/// One weighted gate of an explicit ensemble.
#[derive(Clone, Debug)]
pub struct Gate {
    weight: f64,
    matrix: nd::Array2<C64>,
}

impl Gate {
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn matrix(&self) -> &nd::Array2<C64> {
        &self.matrix
    }
}

/// A weighted finite set of 4×4 unitaries, or the symbolic Haar-U(4) source.
#[derive(Clone, Debug)]
pub struct GateEnsemble {
    kind: EnsembleKind,
    gates: Vec<Gate>,
    label: String,
    /// Set only by [`GateEnsemble::clifford2`]: its moment matrices are
    /// process-wide constants, so `ensemble_ghat` may serve them from a cache.
    moment_cached: bool,
}

impl GateEnsemble {
    /// The symbolic Haar measure on U(4); moment operators use closed forms.
    pub fn haar_u4() -> Self {
        GateEnsemble {
            kind: EnsembleKind::HaarU4,
            gates: Vec::new(),
            label: "haar-u4".into(),
            moment_cached: false,
        }
    }

    /// Builds an explicit ensemble, validating unitarity (1e-10) and weights
    /// (positive, summing to 1 within 1e-6; renormalized to exact sum 1).
    pub fn explicit(
        gates: impl IntoIterator<Item = (f64, nd::Array2<C64>)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut out = Vec::new();
        let mut total = 0.0f64;
        for (idx, (weight, matrix)) in gates.into_iter().enumerate() {
            if weight <= 0.0 || !weight.is_finite() {
                return Err(Error::invalid(format!(
                    "gate {idx}: weight {weight} is not a positive probability"
                )));
            }
            check_unitary(&matrix, idx)?;
            total += weight;
            out.push(Gate { weight, matrix });
        }
        if out.is_empty() {
            return Err(Error::invalid("ensemble has no gates"));
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "gate weights sum to {total}, more than 1e-6 away from 1"
            )));
        }
        for g in &mut out {
            g.weight /= total;
        }
        Ok(GateEnsemble {
            kind: EnsembleKind::Explicit,
            gates: out,
            label: label.into(),
            moment_cached: false,
        })
    }

    /// Singleton ensemble holding one gate with weight 1.
    pub fn single(matrix: nd::Array2<C64>, label: impl Into<String>) -> Result<Self> {
        GateEnsemble::explicit([(1.0, matrix)], label)
    }

    /// The uniform ensemble over the full two-qubit Clifford group modulo
    /// global phase (11520 elements, enumerated once and cached).
    pub fn clifford2() -> Result<Self> {
        let elements = clifford2_elements()?;
        let w = 1.0 / elements.len() as f64;
        let gates = elements
            .iter()
            .map(|m| Gate { weight: w, matrix: m.clone() })
            .collect();
        Ok(GateEnsemble {
            kind: EnsembleKind::Explicit,
            gates,
            label: "clifford2".into(),
            moment_cached: true,
        })
    }

    /// An explicit ensemble of `count` independent Haar-U(4) samples with
    /// uniform weights, used for Monte Carlo moment estimation.
    pub fn haar_samples(count: usize, rng: &mut impl Rng) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("haar_samples: count must be ≥ 1"));
        }
        let w = 1.0 / count as f64;
        let gates = (0..count)
            .map(|_| Gate { weight: w, matrix: sample_haar_u4(rng) })
            .collect();
        Ok(GateEnsemble {
            kind: EnsembleKind::Explicit,
            gates,
            label: format!("haar-u4-samples({count})"),
            moment_cached: false,
        })
    }

    /// Parses the JSON gate document
    /// `{"gates":[{"weight": w, "matrix": [[[re,im],…4],…4]}]}`.
    pub fn from_json(text: &str, label: impl Into<String>) -> Result<Self> {
        let doc: GateFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("gate file: {e}")))?;
        let mut gates = Vec::new();
        for (idx, entry) in doc.gates.iter().enumerate() {
            if entry.matrix.len() != 4 || entry.matrix.iter().any(|row| row.len() != 4) {
                return Err(Error::invalid(format!("gate {idx}: matrix is not 4×4")));
            }
            let m = nd::Array2::from_shape_fn((4, 4), |(r, c)| {
                C64::new(entry.matrix[r][c][0], entry.matrix[r][c][1])
            });
            gates.push((entry.weight, m));
        }
        GateEnsemble::explicit(gates, label)
    }

    /// Reads and parses a JSON gate file from disk.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        GateEnsemble::from_json(&text, format!("file:{}", path.display()))
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn is_explicit(&self) -> bool {
        self.kind == EnsembleKind::Explicit
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty() && self.kind == EnsembleKind::Explicit
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Deserialize)]
struct GateFile {
    gates: Vec<GateFileEntry>,
}

#[derive(Deserialize)]
struct GateFileEntry {
    weight: f64,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn check_unitary(m: &nd::Array2<C64>, idx: usize) -> Result<()> {
    if m.dim() != (4, 4) {
        return Err(Error::invalid(format!(
            "gate {idx}: matrix is {}×{}, expected 4×4",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut dev = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let mut s = ZERO;
            for l in 0..4 {
                s += m[[i, l]] * m[[j, l]].conj();
            }
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((s - target).norm());
        }
    }
    if dev > 1e-10 {
        return Err(Error::invalid(format!(
            "gate {idx}: U·U† deviates from identity by {dev:.3e} > 1e-10"
        )));
    }
    Ok(())
}

/// Real moment matrix `Ĝ(q⃗; p⃗)` on k-tuples of Pauli labels for local
/// dimension `d`; rows index the output tuple `q⃗`, columns the input `p⃗`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    d: usize,
    k: usize,
    entries: nd::Array2<f64>,
}

impl MomentMatrix {
    fn new(d: usize, k: usize, entries: nd::Array2<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), (d * d).pow(k as u32));
        debug_assert_eq!(entries.ncols(), entries.nrows());
        MomentMatrix { d, k, entries }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Side length `(d²)^k`.
    pub fn dim(&self) -> usize {
        (self.d * self.d).pow(self.k as u32)
    }

    pub fn entries(&self) -> &nd::Array2<f64> {
        &self.entries
    }

    /// Flat row/column index of a k-tuple of Pauli labels.
    pub fn flat(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.k);
        let base = self.d * self.d;
        tuple.iter().fold(0usize, |acc, &p| {
            debug_assert!(p < base);
            acc * base + p
        })
    }

    /// Entry `Ĝ(q⃗; p⃗)`.
    pub fn entry(&self, q: &[usize], p: &[usize]) -> f64 {
        self.entries[[self.flat(q), self.flat(p)]]
    }

    pub fn to_complex(&self) -> nd::Array2<C64> {
        self.entries.mapv(|v| C64::new(v, 0.0))
    }

    pub fn max_abs_diff(&self, other: &MomentMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The diagonal sector `D(q; p) = Ĝ((q,q); (p,p))` of a k=2 matrix.
    pub fn diag_sector(&self) -> Result<nd::Array2<f64>> {
        if self.k != 2 {
            return Err(Error::invalid("diag_sector: defined for k = 2 only"));
        }
        let base = self.d * self.d;
        Ok(nd::Array2::from_shape_fn((base, base), |(q, p)| {
            self.entries[[q * base + q, p * base + p]]
        }))
    }
}

/// Moment matrix of the Haar measure on U(d) in the normalized Hermitian
/// basis: k=1 keeps only the identity label; k=2 additionally mixes the
/// diagonal tuples `(p,p)`, `p ≠ 0`, uniformly with weight `1/(d²−1)`.
pub fn haar_ghat(d: usize, k: usize) -> Result<MomentMatrix> {
    if d < 2 {
        return Err(Error::invalid(format!("haar_ghat: d = {d} must be ≥ 2")));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::invalid(format!("haar_ghat: k = {k} not in {{1, 2}}")));
    }
    let base = d * d;
    let dim = base.pow(k as u32);
    if dim > 4096 {
        return Err(Error::invalid(format!(
            "haar_ghat: dimension (d²)^k = {dim} exceeds the dense cap 4096"
        )));
    }
    let mut m = nd::Array2::zeros((dim, dim));
    match k {
        1 => {
            m[[0, 0]] = 1.0;
        }
        _ => {
            m[[0, 0]] = 1.0;
            let w = 1.0 / (base - 1) as f64;
            for q in 1..base {
                for p in 1..base {
                    m[[q * base + q, p * base + p]] = w;
                }
            }
        }
    }
    Ok(MomentMatrix::new(d, k, m))
}

/// Pauli transfer matrix of a single 4×4 unitary:
/// `R(q; p) = (1/4) tr(σ_q U σ_p U†)`, a real orthogonal 16×16 matrix whose
/// 0-row and 0-column are exactly the identity unit vector.
pub(crate) fn gate_ptm(u: &nd::Array2<C64>) -> Result<nd::Array2<f64>> {
    let sigmas: Vec<nd::Array2<C64>> = (0..16)
        .map(|p| PauliString::new(2, p).expect("two-qubit label").matrix())
        .collect();
    let udag = u.t().mapv(|z| z.conj());
    let mut r = nd::Array2::zeros((16, 16));
    for p in 0..16 {
        let ap = u.dot(&sigmas[p]).dot(&udag);
        for q in 0..16 {
            let sq = &sigmas[q];
            let mut tr = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    tr += sq[[i, j]] * ap[[j, i]];
                }
            }
            let val = tr * 0.25;
            if val.im.abs() > 1e-9 {
                return Err(Error::numeric(format!(
                    "gate_ptm: complex transfer entry ({q};{p}) = {val} (non-unitary input?)"
                )));
            }
            r[[q, p]] = val.re;
        }
    }
    // tr(σ_q U σ_0 U†)/4 = δ_{q0} and tr(σ_0 U σ_p U†)/4 = δ_{0p} hold for
    // every unitary; pin them so identity-label invariants are exact.
    for i in 1..16 {
        r[[0, i]] = 0.0;
        r[[i, 0]] = 0.0;
    }
    r[[0, 0]] = 1.0;
    Ok(r)
}

/// Moment matrix `Ĝ` of a gate ensemble. For the symbolic Haar-U(4) kind the
/// exact closed form is returned; explicit ensembles are averaged exactly
/// gate by gate.
pub fn ensemble_ghat(ens: &GateEnsemble, k: usize) -> Result<MomentMatrix> {
    if !(1..=2).contains(&k) {
        return Err(Error::invalid(format!("ensemble_ghat: k = {k} not in {{1, 2}}")));
    }
    if ens.kind == EnsembleKind::HaarU4 {
        return haar_ghat(4, k);
    }
    if ens.moment_cached {
        let entries = CLIFFORD2_GHAT[k - 1]
            .get_or_init(|| explicit_ghat_entries(&ens.gates, k).map_err(|e| e.to_string()));
        return match entries {
            Ok(m) => Ok(MomentMatrix::new(4, k, m.clone())),
            Err(e) => Err(Error::numeric(e.clone())),
        };
    }
    Ok(MomentMatrix::new(4, k, explicit_ghat_entries(&ens.gates, k)?))
}

/// Cached Ĝ entries for the Clifford-2 ensemble, indexed by `k − 1`: summing
/// the 11520-element group is expensive and the result never changes.
static CLIFFORD2_GHAT: [OnceLock<std::result::Result<nd::Array2<f64>, String>>; 2] =
    [OnceLock::new(), OnceLock::new()];

/// Accumulates Σᵢ wᵢ·Rᵢ (k = 1) or Σᵢ wᵢ·Rᵢ ⊗ Rᵢ (k = 2) over an explicit
/// gate list.
fn explicit_ghat_entries(gates: &[Gate], k: usize) -> Result<nd::Array2<f64>> {
    let dim = 16usize.pow(k as u32);
    let mut acc = nd::Array2::zeros((dim, dim));
    for gate in gates {
        let r = gate_ptm(&gate.matrix)?;
        match k {
            1 => acc.scaled_add(gate.weight, &r),
            _ => {
                // Ĝ_i = R ⊗ R accumulated in place.
                for q1 in 0..16 {
                    for q2 in 0..16 {
                        let row = q1 * 16 + q2;
                        let rq1 = r.row(q1);
                        let rq2 = r.row(q2);
                        let mut out = acc.row_mut(row);
                        for p1 in 0..16 {
                            let f = gate.weight * rq1[p1];
                            if f == 0.0 {
                                continue;
                            }
                            for p2 in 0..16 {
                                out[p1 * 16 + p2] += f * rq2[p2];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Raw moment matrix `G = Σ_i w_i U_i^{⊗k} ⊗ (U_i*)^{⊗k}` of an explicit
/// ensemble (complex, side `4^{2k}`).
pub fn ensemble_g(ens: &GateEnsemble, k: usize) -> Result<nd::Array2<C64>> {
    if !(1..=2).contains(&k) {
        return Err(Error::invalid(format!("ensemble_g: k = {k} not in {{1, 2}}")));
    }
    if ens.kind != EnsembleKind::Explicit {
        return Err(Error::invalid(
            "ensemble_g: requires an explicit ensemble (build Haar samples first)",
        ));
    }
    let dim = 16usize.pow(k as u32);
    let mut acc = nd::Array2::from_elem((dim, dim), ZERO);
    for gate in &ens.gates {
        let uk = match k {
            1 => gate.matrix.clone(),
            _ => kron(&gate.matrix, &gate.matrix),
        };
        let ukc = uk.mapv(|z| z.conj());
        let g = kron(&uk, &ukc);
        acc.scaled_add(C64::new(gate.weight, 0.0), &g);
    }
    Ok(acc)
}

/// Spectral summary used by the k-copy-gapped test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Number of eigenvalues with `|λ| > 1 − tol`.
    pub unit_modulus_count: usize,
    /// Largest modulus among the remaining eigenvalues (0 if none remain).
    pub second_modulus: f64,
    /// True iff `unit_modulus_count = k!` and `second_modulus < 1 − tol`.
    pub is_gapped: bool,
    pub tol: f64,
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// Gap analysis of a complex square matrix: counts eigenvalues of modulus
/// above `1 − tol` and reports the largest modulus among the rest.
pub fn gap_report(m: &nd::Array2<C64>, k: usize, tol: f64) -> Result<GapReport> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::invalid(format!(
            "gap_report: matrix is {}×{}, expected square and nonempty",
            m.nrows(),
            m.ncols()
        )));
    }
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::invalid(format!("gap_report: tol = {tol} not in (0, 0.5)")));
    }
    if k == 0 || k > 20 {
        return Err(Error::invalid(format!("gap_report: k = {k} out of range 1..=20")));
    }
    let vals = m
        .eigvals()
        .map_err(|e| Error::numeric(format!("gap_report: eigensolver failed: {e}")))?;
    let mut moduli: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).expect("finite moduli"));
    let cut = 1.0 - tol;
    let unit_modulus_count = moduli.iter().take_while(|&&v| v > cut).count();
    let second_modulus = moduli.get(unit_modulus_count).copied().unwrap_or(0.0);
    let is_gapped = unit_modulus_count == factorial(k) && second_modulus < cut;
    Ok(GapReport { unit_modulus_count, second_modulus, is_gapped, tol })
}

/// [`gap_report`] for a real matrix.
pub fn gap_report_real(m: &nd::Array2<f64>, k: usize, tol: f64) -> Result<GapReport> {
    gap_report(&m.mapv(|v| C64::new(v, 0.0)), k, tol)
}

/// Default tolerance for unit-modulus counting.
pub const GAP_TOL_DEFAULT: f64 = 1e-8;

/// Draws a Haar-distributed 4×4 unitary: orthonormalize a complex Gaussian
/// matrix by QR, then cancel the phases of the triangular factor's diagonal
/// so the distribution is exactly Haar rather than merely unitary.
pub fn sample_haar_u4(rng: &mut impl Rng) -> nd::Array2<C64> {
    let mut g = nd::Array2::from_elem((4, 4), ZERO);
    for i in 0..4 {
        for j in 0..4 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[[i, j]] = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    // Gram–Schmidt columns with phase fixed by the positive-real projection
    // coefficient (equivalent to QR with R's diagonal made positive real).
    let mut q = g;
    for j in 0..4 {
        for l in 0..j {
            let mut overlap = ZERO;
            for i in 0..4 {
                overlap += q[[i, l]].conj() * q[[i, j]];
            }
            for i in 0..4 {
                let sub = overlap * q[[i, l]];
                q[[i, j]] -= sub;
            }
        }
        let norm: f64 = (0..4).map(|i| q[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..4 {
            q[[i, j]] /= norm;
        }
    }
    q
}

static CLIFFORD2: OnceLock<std::result::Result<Vec<nd::Array2<C64>>, String>> = OnceLock::new();

/// The cached two-qubit Clifford group modulo global phase.
fn clifford2_elements() -> Result<&'static Vec<nd::Array2<C64>>> {
    CLIFFORD2
        .get_or_init(enumerate_clifford2)
        .as_ref()
        .map_err(|e| Error::numeric(e.clone()))
}

/// Canonical representative modulo global phase: rescale so the first
/// nonzero entry in row-major order is positive real.
pub(crate) fn phase_canonical(m: &nd::Array2<C64>) -> nd::Array2<C64> {
    for v in m.iter() {
        if v.norm() > 1e-8 {
            let phase = v / v.norm();
            return m.mapv(|z| z * phase.conj());
        }
    }
    m.clone()
}

fn quantized_key(m: &nd::Array2<C64>) -> Vec<i64> {
    let scale = (1u64 << 20) as f64;
    m.iter()
        .flat_map(|z| [(z.re * scale).round() as i64, (z.im * scale).round() as i64])
        .collect()
}

fn enumerate_clifford2() -> std::result::Result<Vec<nd::Array2<C64>>, String> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = nd::array![[C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-s, 0.0)]];
    let sg = nd::array![[ONE, ZERO], [ZERO, C64::new(0.0, 1.0)]];
    let id2 = nd::Array2::from_diag_elem(2, ONE);
    let mut cnot = nd::Array2::from_elem((4, 4), ZERO);
    // control = qubit 1 (most significant bit), target = qubit 2.
    for (col, row) in [(0usize, 0usize), (1, 1), (2, 3), (3, 2)] {
        cnot[[row, col]] = ONE;
    }
    let generators = [
        kron(&h, &id2),
        kron(&id2, &h),
        kron(&sg, &id2),
        kron(&id2, &sg),
        cnot,
    ];

    let start = phase_canonical(&nd::Array2::from_diag_elem(4, ONE));
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut elements = vec![start.clone()];
    seen.insert(quantized_key(&start), 0);
    let mut frontier = vec![start];
    while let Some(m) = frontier.pop() {
        for gen in &generators {
            let next = phase_canonical(&gen.dot(&m));
            let key = quantized_key(&next);
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key) {
                if elements.len() >= 4 * CLIFFORD2_SIZE {
                    return Err(format!(
                        "clifford2_group: closure exceeded {} elements",
                        4 * CLIFFORD2_SIZE
                    ));
                }
                e.insert(elements.len());
                elements.push(next.clone());
                frontier.push(next);
            }
        }
    }
    if elements.len() != CLIFFORD2_SIZE {
        return Err(format!(
            "clifford2_group: closure produced {} elements, expected {CLIFFORD2_SIZE}",
            elements.len()
        ));
    }
    Ok(elements)
}

/// Projector/symmetry residues of a moment matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectorReport {
    /// `‖M² − M‖_max`.
    pub projector_residue: f64,
    /// `‖M − Mᵀ‖_max`.
    pub symmetry_residue: f64,
    pub passes: bool,
    pub tol: f64,
}

/// Measures how far a moment matrix is from a symmetric projector; passes
/// iff both residues are below `tol`.
pub fn projector_check(m: &MomentMatrix, tol: f64) -> ProjectorReport {
    let e = &m.entries;
    let sq = e.dot(e);
    let projector_residue = sq
        .iter()
        .zip(e.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let symmetry_residue = e
        .iter()
        .zip(e.t().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ProjectorReport {
        projector_residue,
        symmetry_residue,
        passes: projector_residue < tol && symmetry_residue < tol,
        tol,
    }
}
