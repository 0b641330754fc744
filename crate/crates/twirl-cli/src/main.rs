//! `twirl` — command-line front end for the `twirl` library.
//!
//! Subcommands build moment operators (`ghat`, `gap`), export the induced
//! Markov chains (`chain`), measure mixing (`mix`, `sweep`), run Monte Carlo
//! simulations (`decay`, `frame`, `traj`), and assemble design-distance
//! reports (`design`).
//!
//! Output contract, shared by every subcommand:
//!
//! - CSV files start with the line `# twirl <command> v<version> seed=<seed>`
//!   followed by one `#` context line; floats use `.` decimals with 17
//!   significant digits so values round-trip exactly.
//! - JSON files are one object `{command, version, seed, report}`.
//! - Outputs are byte-identical across runs with the same flags.
//! - Exit codes: 0 success, 1 invalid input (the message names the offending
//!   field), 2 numeric failure.
//!
//! With `--out PATH` the report goes to the file and a one-line summary to
//! stdout; without it the report goes to stdout and the summary to stderr.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use twirl::chains::{self, ChainMatrix, Space};
use twirl::metrics;
use twirl::moments::{self, GateEnsemble, MomentMatrix, GAP_TOL_DEFAULT};
use twirl::pauli::{expand_pauli, CoeffTensor, DenseOperator};
use twirl::simulate::{self, FrameSource};
use twirl::spectral;
use twirl::Error as LibError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// Command-line grammar
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "twirl",
    version,
    about = "Moment operators of random two-qubit-gate circuits, their Pauli-string \
             Markov chains, and spectral/mixing analysis",
    after_help = "Ensemble specs: `haar-u4`, `clifford2`, or `file:PATH` pointing at a JSON \
                  gate document {\"gates\":[{\"weight\":w,\"matrix\":[[[re,im],..4],..4]},..]}."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Full,
    Zero,
    Accelerated,
}

impl SpaceArg {
    fn space(self) -> Space {
        match self {
            SpaceArg::Full => Space::Full,
            SpaceArg::Zero => Space::Zero,
            SpaceArg::Accelerated => Space::Accelerated,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the moment matrix Ĝ of an ensemble (Haar closed form by default).
    Ghat {
        /// Gate dimension for the Haar closed form (explicit ensembles fix d = 4).
        #[arg(long, default_value_t = 4)]
        d: usize,
        /// Moment order, 1 or 2.
        #[arg(long)]
        k: usize,
        /// Ensemble spec: haar-u4 | clifford2 | file:PATH.
        #[arg(long, default_value = "haar-u4")]
        ensemble: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format [default: csv].
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Recorded in the header; this command is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Eigenvalue-gap report of an ensemble's moment matrix (k-copy-gapped test).
    Gap {
        /// Moment order, 1 or 2.
        #[arg(long)]
        k: usize,
        /// Ensemble spec: haar-u4 | clifford2 | file:PATH.
        #[arg(long, default_value = "haar-u4")]
        ensemble: String,
        /// Unit-modulus tolerance: eigenvalues with |λ| > 1 − tol count as unit.
        #[arg(long, default_value_t = GAP_TOL_DEFAULT)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format [default: json].
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Recorded in the header; this command is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export a transition matrix as (row, col, value) triplets.
    Chain {
        /// State space: full (nonzero Pauli strings), zero, or accelerated.
        #[arg(long, value_enum)]
        space: SpaceArg,
        /// Number of qubits.
        #[arg(long)]
        n: usize,
        /// Ensemble spec for the full chain (ignored by the weight chains).
        #[arg(long, default_value = "haar-u4")]
        ensemble: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format [default: csv].
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Recorded in the header; this command is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact worst-start mixing time of a chain with the gap-based bound.
    Mix {
        /// Chain to analyze: full, zero, or accelerated.
        #[arg(long = "chain", value_enum)]
        chain: SpaceArg,
        /// Number of qubits.
        #[arg(long)]
        n: usize,
        /// Total-variation threshold in (0, 1).
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Ensemble spec for the full chain (ignored by the weight chains).
        #[arg(long, default_value = "haar-u4")]
        ensemble: String,
        /// Seeds the random extra start states of the full chain.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: json = full report, csv = (t, distance) curve [default: json].
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Monte Carlo decay curve of Pauli-coefficient mass under random pair gates.
    Decay {
        /// Number of qubits (2..=10 for k=1, 2..=5 for k=2).
        #[arg(long)]
        n: usize,
        /// Copy order: 1 tracks Σ|γ(p)|, 2 tracks the two-copy off-diagonal mass.
        #[arg(long)]
        k: usize,
        /// Ensemble spec: haar-u4 | clifford2 | file:PATH.
        #[arg(long, default_value = "haar-u4")]
        ensemble: String,
        /// Independent pair sequences to average.
        #[arg(long)]
        trials: usize,
        /// Number of steps; the curve has points t = 0..=t.
        #[arg(long)]
        t: usize,
        /// Master seed; trial r uses stream r.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format [default: csv].
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Design-distance report: 1-/2-norm deviations and the diamond-norm bound.
    Design {
        /// Number of qubits (≤ 3, the diamond-bound cap).
        #[arg(long)]
        n: usize,
        /// Number of steps of the expected map.
        #[arg(long)]
        t: usize,
        /// Ensemble spec: haar-u4 | clifford2 | file:PATH.
        #[arg(long, default_value = "haar-u4")]
        ensemble: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format [default: json].
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Recorded in the header; this command is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo frame potential E|tr(U†V)|^{2k} of an ensemble or of sampled circuits.
    Frame {
        /// Moment order, 1 or 2.
        #[arg(long)]
        k: usize,
        /// Ensemble spec: haar-u4 | clifford2 | file:PATH.
        #[arg(long, default_value = "haar-u4")]
        ensemble: String,
        /// Independent (U, V) pairs to average.
        #[arg(long)]
        trials: usize,
        /// Sample t-step circuits on n qubits instead of single gates (needs --t).
        #[arg(long)]
        n: Option<usize>,
        /// Circuit length for the circuit source (needs --n).
        #[arg(long)]
        t: Option<usize>,
        /// Master seed; trial r uses stream r.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format [default: json].
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Sample one zero-chain trajectory; reports occupancy and waiting times.
    Traj {
        /// Number of qubits.
        #[arg(long)]
        n: usize,
        /// Number of steps.
        #[arg(long)]
        t: usize,
        /// Start weight in 1..=n.
        #[arg(long, default_value_t = 1)]
        start: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: csv = occupancy histogram, json = full trajectory [default: csv].
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Gap/mixing sweep over several n: one row per n, failures recorded in the row.
    Sweep {
        /// Comma-separated qubit counts, e.g. `8,16,32`; may be empty.
        #[arg(long = "n-list", allow_hyphen_values = true)]
        n_list: String,
        /// Chain to sweep: zero or accelerated.
        #[arg(long = "chain", value_enum, default_value_t = SpaceArg::Zero)]
        chain: SpaceArg,
        /// Total-variation threshold for the mixing time.
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Recorded in the header; weight-chain sweeps are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format [default: csv].
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

// ---------------------------------------------------------------------------
// Error → exit-code mapping
// ---------------------------------------------------------------------------

/// CLI failure carrying its process exit code.
enum AppError {
    /// Exit 1: bad flags, unresolvable ensemble specs, I/O problems.
    Invalid(String),
    /// Exit 2: numeric failure inside the library.
    Numeric(String),
}

impl AppError {
    fn invalid(msg: impl Into<String>) -> Self {
        AppError::Invalid(msg.into())
    }

    fn code(&self) -> i32 {
        match self {
            AppError::Invalid(_) => 1,
            AppError::Numeric(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Invalid(m) | AppError::Numeric(m) => m,
        }
    }
}

impl From<LibError> for AppError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::InvalidInput(m) => AppError::Invalid(m),
            LibError::Numeric(m) => AppError::Numeric(m),
        }
    }
}

type AppResult<T> = std::result::Result<T, AppError>;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Resolves `haar-u4` | `clifford2` | `file:PATH`; anything else is invalid.
fn parse_ensemble(spec: &str) -> AppResult<GateEnsemble> {
    match spec {
        "haar-u4" => Ok(GateEnsemble::haar_u4()),
        "clifford2" => Ok(GateEnsemble::clifford2()?),
        _ => {
            if let Some(path) = spec.strip_prefix("file:") {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    AppError::invalid(format!("--ensemble: cannot read {path}: {e}"))
                })?;
                Ok(GateEnsemble::from_json(&text, spec)?)
            } else {
                Err(AppError::invalid(format!(
                    "--ensemble: `{spec}` is not haar-u4, clifford2, or file:PATH"
                )))
            }
        }
    }
}

/// Ĝ for the resolved ensemble; the Haar spec honours `d`, explicit gate sets
/// require `d = 4`.
fn resolve_ghat(d: usize, k: usize, spec: &str) -> AppResult<MomentMatrix> {
    if spec == "haar-u4" {
        return Ok(moments::haar_ghat(d, k)?);
    }
    if d != 4 {
        return Err(AppError::invalid(format!(
            "--d: explicit ensembles are two-qubit gates, so d must be 4 (got {d})"
        )));
    }
    let ens = parse_ensemble(spec)?;
    Ok(moments::ensemble_ghat(&ens, k)?)
}

fn build_chain(space: Space, n: usize, ensemble: &str) -> AppResult<ChainMatrix> {
    match space {
        Space::Full => {
            let ghat = resolve_ghat(4, 2, ensemble)?;
            Ok(chains::full_chain(n, &ghat)?)
        }
        Space::Zero => Ok(chains::zero_chain(n)?),
        Space::Accelerated => Ok(chains::accelerated_chain(n)?),
    }
}

/// Two-copy Pauli coefficients of the pure product state |0…0⟩⟨0…0|, the
/// default initial data for `decay --k 2` and `design`.
fn zero_state_two_copy(n: usize) -> AppResult<CoeffTensor> {
    let rho = DenseOperator::zero_state(n)?;
    let gamma1 = expand_pauli(&rho, n, 1)?;
    Ok(gamma1.two_copy_product()?)
}

/// A float with 17 significant digits: exact round-trip, `.` decimal.
fn f(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# twirl <command> v<version> seed=<seed>` — the first line of every CSV.
fn csv_header(command: &str, seed: u64) -> String {
    format!("# twirl {command} v{VERSION} seed={seed}\n")
}

/// `{command, version, seed, report}` — the envelope of every JSON file.
fn json_envelope(command: &str, seed: u64, report: serde_json::Value) -> String {
    let doc = json!({
        "command": command,
        "version": VERSION,
        "seed": seed,
        "report": report,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// A rendered report plus its one-line summary.
struct Artifact {
    body: String,
    summary: String,
}

fn emit(artifact: Artifact, out: &Option<PathBuf>) -> AppResult<()> {
    match out {
        Some(path) => {
            std::fs::write(path, artifact.body).map_err(|e| {
                AppError::invalid(format!("--out: cannot write {}: {e}", path.display()))
            })?;
            println!("{} -> {}", artifact.summary, path.display());
        }
        None => {
            print!("{}", artifact.body);
            eprintln!("{}", artifact.summary);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn run_ghat(d: usize, k: usize, ensemble: &str, format: Format, seed: u64) -> AppResult<Artifact> {
    let ghat = resolve_ghat(d, k, ensemble)?;
    let dim = ghat.dim();
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("ghat", seed);
            let _ = writeln!(text, "# ensemble={ensemble} d={d} k={k} dim={dim}");
            for row in ghat.entries().rows() {
                let line: Vec<String> = row.iter().map(|&x| f(x)).collect();
                text.push_str(&line.join(","));
                text.push('\n');
            }
            text
        }
        Format::Json => {
            let rows: Vec<Vec<f64>> =
                ghat.entries().rows().into_iter().map(|r| r.to_vec()).collect();
            json_envelope(
                "ghat",
                seed,
                json!({"ensemble": ensemble, "d": d, "k": k, "dim": dim, "entries": rows}),
            )
        }
    };
    Ok(Artifact { body, summary: format!("ghat: ensemble={ensemble} d={d} k={k} dim={dim}") })
}

fn run_gap(
    k: usize,
    ensemble: &str,
    tol: f64,
    format: Format,
    seed: u64,
) -> AppResult<Artifact> {
    let ghat = resolve_ghat(4, k, ensemble)?;
    let report = moments::gap_report_real(ghat.entries(), k, tol)?;
    let summary = format!(
        "gap: ensemble={ensemble} k={k} unit_modulus_count={} second_modulus={:.6} is_gapped={}",
        report.unit_modulus_count, report.second_modulus, report.is_gapped
    );
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("gap", seed);
            let _ = writeln!(text, "# ensemble={ensemble} k={k}");
            text.push_str("unit_modulus_count,second_modulus,is_gapped,tol\n");
            let _ = writeln!(
                text,
                "{},{},{},{}",
                report.unit_modulus_count,
                f(report.second_modulus),
                report.is_gapped,
                f(report.tol)
            );
            text
        }
        Format::Json => {
            let mut value = serde_json::to_value(&report).expect("report serializes");
            let obj = value.as_object_mut().expect("report is an object");
            obj.insert("ensemble".into(), json!(ensemble));
            obj.insert("k".into(), json!(k));
            json_envelope("gap", seed, value)
        }
    };
    Ok(Artifact { body, summary })
}

fn run_chain(
    space: Space,
    n: usize,
    ensemble: &str,
    format: Format,
    seed: u64,
) -> AppResult<Artifact> {
    let chain = build_chain(space, n, ensemble)?;
    let triplets = chain.triplets();
    let states = chain.states();
    let tag = space.name();
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("chain", seed);
            let _ = writeln!(text, "# space={tag} n={n} states={states}");
            text.push_str("row,col,value\n");
            for (r, c, v) in &triplets {
                let _ = writeln!(text, "{r},{c},{}", f(*v));
            }
            text
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> =
                triplets.iter().map(|(r, c, v)| json!([r, c, v])).collect();
            json_envelope(
                "chain",
                seed,
                json!({"space": tag, "n": n, "states": states, "triplets": rows}),
            )
        }
    };
    Ok(Artifact {
        body,
        summary: format!("chain: space={tag} n={n} states={states} nonzeros={}", triplets.len()),
    })
}

fn run_mix(
    space: Space,
    n: usize,
    eps: f64,
    ensemble: &str,
    seed: u64,
    format: Format,
) -> AppResult<Artifact> {
    let chain = build_chain(space, n, ensemble)?;
    let starts = spectral::default_starts(&chain, seed);
    let report = spectral::mixing_time(&chain, eps, &starts)?;
    let tag = space.name();
    let summary = format!(
        "mix: chain={tag} n={n} eps={eps} gap={:.6} tau={} tau_bound={:.1}",
        report.gap, report.tau, report.tau_bound
    );
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("mix", seed);
            let _ = writeln!(
                text,
                "# chain={tag} n={n} eps={} gap={} reversible={} tau={} tau_bound={}",
                f(report.epsilon),
                f(report.gap),
                report.reversible,
                report.tau,
                f(report.tau_bound)
            );
            text.push_str("t,distance\n");
            for (t, dist) in &report.distance_curve {
                let _ = writeln!(text, "{t},{}", f(*dist));
            }
            text
        }
        Format::Json => {
            let mut value = serde_json::to_value(&report).expect("report serializes");
            let obj = value.as_object_mut().expect("report is an object");
            obj.insert("chain".into(), json!(tag));
            obj.insert("n".into(), json!(n));
            json_envelope("mix", seed, value)
        }
    };
    Ok(Artifact { body, summary })
}

fn run_decay(
    n: usize,
    k: usize,
    ensemble: &str,
    trials: usize,
    t_max: usize,
    seed: u64,
    format: Format,
) -> AppResult<Artifact> {
    let ens = parse_ensemble(ensemble)?;
    let curve = match k {
        1 => {
            let init = DenseOperator::zero_state(n)?;
            simulate::decay_k1(n, t_max, &ens, &init, trials, seed)?
        }
        2 => {
            let init = zero_state_two_copy(n)?;
            simulate::decay_k2_offdiag(n, t_max, &ens, &init, trials, seed)?
        }
        _ => return Err(AppError::invalid(format!("--k: {k} is not 1 or 2"))),
    };
    let kind = curve.kind.name();
    let last = curve.points.last().expect("curve has t = 0");
    let summary = format!(
        "decay: kind={kind} n={n} ensemble={ensemble} trials={trials} t={t_max} final={:.6e}",
        last.value
    );
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("decay", seed);
            let _ = writeln!(text, "# kind={kind} n={n} ensemble={ensemble} trials={trials}");
            text.push_str("t,value,stderr\n");
            for p in &curve.points {
                let _ = writeln!(text, "{},{},{}", p.t, f(p.value), f(p.stderr));
            }
            text
        }
        Format::Json => {
            let mut value = serde_json::to_value(&curve).expect("curve serializes");
            let obj = value.as_object_mut().expect("curve is an object");
            obj.insert("n".into(), json!(n));
            obj.insert("ensemble".into(), json!(ensemble));
            obj.insert("trials".into(), json!(trials));
            json_envelope("decay", seed, value)
        }
    };
    Ok(Artifact { body, summary })
}

fn run_design(
    n: usize,
    t: usize,
    ensemble: &str,
    format: Format,
    seed: u64,
) -> AppResult<Artifact> {
    let ens = parse_ensemble(ensemble)?;
    let init = zero_state_two_copy(n)?;
    let report = metrics::design_report(n, t, &ens, &init)?;
    let summary = format!(
        "design: n={n} t={t} ensemble={} target={} l1={:.6e} l2={:.6e} diamond={:.6e}",
        report.ensemble, report.target, report.l1, report.l2, report.diamond_upper_bound
    );
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("design", seed);
            let _ = writeln!(text, "# ensemble={} target={}", report.ensemble, report.target);
            text.push_str("n,t,l1,l2,diamond_upper_bound\n");
            let _ = writeln!(
                text,
                "{n},{t},{},{},{}",
                f(report.l1),
                f(report.l2),
                f(report.diamond_upper_bound)
            );
            text
        }
        Format::Json => {
            let value = serde_json::to_value(&report).expect("report serializes");
            json_envelope("design", seed, value)
        }
    };
    Ok(Artifact { body, summary })
}

fn run_frame(
    k: usize,
    ensemble: &str,
    trials: usize,
    n: Option<usize>,
    t: Option<usize>,
    seed: u64,
    format: Format,
) -> AppResult<Artifact> {
    let ens = parse_ensemble(ensemble)?;
    let (source, source_tag) = match (n, t) {
        (Some(n), Some(t)) => (FrameSource::CircuitSampler { n, t, ens: &ens }, "circuit"),
        (None, None) => (FrameSource::Ensemble(&ens), "ensemble"),
        (Some(_), None) => {
            return Err(AppError::invalid("--t: required when --n selects the circuit source"))
        }
        (None, Some(_)) => {
            return Err(AppError::invalid("--n: required when --t selects the circuit source"))
        }
    };
    let (value, stderr) = simulate::frame_potential(&source, k, trials, seed)?;
    let summary = format!(
        "frame: source={source_tag} ensemble={ensemble} k={k} trials={trials} \
         value={value:.6} stderr={stderr:.3e}"
    );
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("frame", seed);
            let _ = writeln!(text, "# source={source_tag} ensemble={ensemble}");
            text.push_str("k,trials,value,stderr\n");
            let _ = writeln!(text, "{k},{trials},{},{}", f(value), f(stderr));
            text
        }
        Format::Json => json_envelope(
            "frame",
            seed,
            json!({
                "source": source_tag,
                "ensemble": ensemble,
                "k": k,
                "n": n,
                "t": t,
                "trials": trials,
                "value": value,
                "stderr": stderr,
            }),
        ),
    };
    Ok(Artifact { body, summary })
}

fn run_traj(
    n: usize,
    steps: usize,
    start: usize,
    seed: u64,
    format: Format,
) -> AppResult<Artifact> {
    let traj = simulate::zero_trajectory(n, steps, start, seed)?;
    let summary = format!(
        "traj: n={n} steps={steps} start={start} final_window_mean={:.4} \
         final_window_stderr={:.3e}",
        traj.final_window_mean, traj.final_window_stderr
    );
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("traj", seed);
            let _ = writeln!(
                text,
                "# n={n} steps={steps} start={start} final_window_mean={} final_window_stderr={}",
                f(traj.final_window_mean),
                f(traj.final_window_stderr)
            );
            text.push_str("x,count\n");
            for (x, count) in traj.occupancy.iter().enumerate() {
                let _ = writeln!(text, "{},{count}", x + 1);
            }
            text
        }
        Format::Json => {
            let value = serde_json::to_value(&traj).expect("trajectory serializes");
            json_envelope("traj", seed, value)
        }
    };
    Ok(Artifact { body, summary })
}

/// One sweep row; `Err` carries the per-n failure message.
type SweepRow = std::result::Result<(usize, f64, usize, f64), String>;

fn sweep_row(space: Space, n: usize, eps: f64, seed: u64) -> SweepRow {
    if n < 2 {
        return Err(format!("n = {n} must be ≥ 2"));
    }
    let run = || -> AppResult<(usize, f64, usize, f64)> {
        let chain = build_chain(space, n, "haar-u4")?;
        let (gap, _) = spectral::eigen_gap(&chain)?;
        let starts = spectral::default_starts(&chain, seed);
        let report = spectral::mixing_time(&chain, eps, &starts)?;
        let norm = report.tau as f64 / (n as f64 * (n as f64).ln());
        Ok((n, gap, report.tau, norm))
    };
    run().map_err(|e| e.message().to_string())
}

fn run_sweep(
    n_list: &str,
    space: Space,
    eps: f64,
    seed: u64,
    format: Format,
) -> AppResult<Artifact> {
    if space == Space::Full {
        return Err(AppError::invalid("--chain: sweep supports zero and accelerated only"));
    }
    let mut ns: Vec<usize> = Vec::new();
    for part in n_list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let n: usize = part
            .parse()
            .map_err(|_| AppError::invalid(format!("--n-list: `{part}` is not an integer")))?;
        ns.push(n);
    }
    let rows: Vec<(usize, SweepRow)> =
        ns.iter().map(|&n| (n, sweep_row(space, n, eps, seed))).collect();
    let errors = rows.iter().filter(|(_, r)| r.is_err()).count();
    let tag = space.name();
    let body = match format {
        Format::Csv => {
            let mut text = csv_header("sweep", seed);
            let _ = writeln!(text, "# chain={tag} eps={}", f(eps));
            text.push_str("n,gap,gap_times_n,tau,tau_over_n_log_n\n");
            for (n, row) in &rows {
                match row {
                    Ok((_, gap, tau, norm)) => {
                        let _ = writeln!(
                            text,
                            "{n},{},{},{tau},{}",
                            f(*gap),
                            f(gap * *n as f64),
                            f(*norm)
                        );
                    }
                    Err(_) => {
                        let _ = writeln!(text, "{n},error,error,error,error");
                    }
                }
            }
            text
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(n, row)| match row {
                    Ok((_, gap, tau, norm)) => json!({
                        "n": n,
                        "gap": gap,
                        "gap_times_n": gap * *n as f64,
                        "tau": tau,
                        "tau_over_n_log_n": norm,
                    }),
                    Err(msg) => json!({"n": n, "error": msg}),
                })
                .collect();
            json_envelope("sweep", seed, json!({"chain": tag, "eps": eps, "rows": items}))
        }
    };
    Ok(Artifact {
        body,
        summary: format!("sweep: chain={tag} eps={eps} rows={} errors={errors}", rows.len()),
    })
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn dispatch(cmd: Cmd) -> AppResult<()> {
    match cmd {
        Cmd::Ghat { d, k, ensemble, out, format, seed } => {
            let fmt = format.unwrap_or(Format::Csv);
            emit(run_ghat(d, k, &ensemble, fmt, seed)?, &out)
        }
        Cmd::Gap { k, ensemble, tol, out, format, seed } => {
            let fmt = format.unwrap_or(Format::Json);
            emit(run_gap(k, &ensemble, tol, fmt, seed)?, &out)
        }
        Cmd::Chain { space, n, ensemble, out, format, seed } => {
            let fmt = format.unwrap_or(Format::Csv);
            emit(run_chain(space.space(), n, &ensemble, fmt, seed)?, &out)
        }
        Cmd::Mix { chain, n, eps, ensemble, seed, out, format } => {
            let fmt = format.unwrap_or(Format::Json);
            emit(run_mix(chain.space(), n, eps, &ensemble, seed, fmt)?, &out)
        }
        Cmd::Decay { n, k, ensemble, trials, t, seed, out, format } => {
            let fmt = format.unwrap_or(Format::Csv);
            emit(run_decay(n, k, &ensemble, trials, t, seed, fmt)?, &out)
        }
        Cmd::Design { n, t, ensemble, out, format, seed } => {
            let fmt = format.unwrap_or(Format::Json);
            emit(run_design(n, t, &ensemble, fmt, seed)?, &out)
        }
        Cmd::Frame { k, ensemble, trials, n, t, seed, out, format } => {
            let fmt = format.unwrap_or(Format::Json);
            emit(run_frame(k, &ensemble, trials, n, t, seed, fmt)?, &out)
        }
        Cmd::Traj { n, t, start, seed, out, format } => {
            let fmt = format.unwrap_or(Format::Csv);
            emit(run_traj(n, t, start, seed, fmt)?, &out)
        }
        Cmd::Sweep { n_list, chain, eps, seed, out, format } => {
            let fmt = format.unwrap_or(Format::Csv);
            emit(run_sweep(&n_list, chain.space(), eps, seed, fmt)?, &out)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.cmd) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}
