//! Command-line front end. The `meanindex` binary only parses arguments and
//! calls [`run`].
//!
//! Exit codes: `0` clean run, `2` some verdict failed (the data is
//! inconsistent with a theorem or an invariant), `1` error.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contact::{
    asymptotic_morse, build_truncated_complex, chi_closed_form, chi_truncated, euler_report, limit_series_csv_rows,
    validate_index_bounds, ChiTruncated, ChiValue, ContactError, CzLaw, Direction, EulerReport, IndexBoundsReport,
    LimitComparison, MorseReport, ReebOrbit, ReebOrbitSystem, TruncatedComplex, LIMIT_CSV_HEADER,
};
use crate::exactnum::{ExactScalar, Symbol, SymbolTable};
use crate::lattice::{lattice_index, matrix_to_text, RelationCandidate};
use crate::models::{
    admissible_p, cpn_mean_indices, ellipsoid_system, ustilovsky_chi, EllipsoidSpec, LinearizedReturnMap,
    UstilovskySpec,
};
use crate::resonance::{
    gamma_structure, parse_problem_json, prohibited_region_scan, resonance_lattice_exact, resonance_lattice_numeric,
    sign_normalize, theorem_one_report, ChernNumber, GammaStructure, IndexFilter, MeanIndexProblem, ProblemFile,
    ScanReport, TheoremOneReport,
};
use crate::serde_util::sig12;
use crate::synth;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_COEFF_BOUND: u32 = 20;
pub const DEFAULT_K_MAX: u64 = 10_000;
pub const DEFAULT_N_LIST: [u64; 3] = [100, 1_000, 10_000];
/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "MEANINDEX_THREADS";

#[derive(Parser, Debug)]
#[command(name = "meanindex", version, about = "Resonance lattices of mean indices and mean Euler characteristics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Resonance lattice, torus closure and theorem verdicts for a mean-index problem.
    Resonance(ResonanceArgs),
    /// Prohibited-region scan of the orbit `kΔ/2N`.
    Scan(ScanArgs),
    /// Mean Euler characteristics by both routes.
    Euler(EulerArgs),
    /// Generator counts of one truncated complex.
    Truncate(TruncateArgs),
    /// Emit a model as an input file.
    Model {
        #[command(subcommand)]
        kind: ModelCommand,
    },
    /// Run the seeded invariant suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemModel {
    Cpn,
}

#[derive(Args, Debug)]
pub struct ProblemSource {
    /// Problem file (JSON).
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "input")]
    pub model: Option<ProblemModel>,
    /// ℂPⁿ eigenvalues: rationals, `sqrtK`, or symbol names.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambdas: Vec<String>,
    /// Float witness for a symbol, `name=value`.
    #[arg(long = "witness")]
    pub witnesses: Vec<String>,
}

#[derive(Args, Debug)]
pub struct ResonanceArgs {
    #[command(flatten)]
    pub source: ProblemSource,
    /// Index filter for the sub-report: none, drop-zero, drop-rational.
    #[arg(long, default_value = "none")]
    pub filter: IndexFilter,
    /// Also run the prohibited-region scan.
    #[arg(long)]
    pub scan: bool,
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    pub k_max: u64,
    /// Also run float relation detection.
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_COEFF_BOUND)]
    pub coeff_bound: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: ProblemSource,
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    pub k_max: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SystemModel {
    Ellipsoid,
    Ustilovsky,
}

#[derive(Args, Debug)]
pub struct SystemSource {
    /// Orbit-system file (JSON).
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "input")]
    pub model: Option<SystemModel>,
    /// Ellipsoid weights: rationals, floats, `phi` or `sqrtK`.
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<String>,
    /// Treat rational weights as floats.
    #[arg(long)]
    pub numeric: bool,
    /// Brieskorn sphere dimension parameter (odd, ≥ 3).
    #[arg(long)]
    pub n: Option<u32>,
    /// Brieskorn exponent (≡ ±1 mod 8).
    #[arg(long)]
    pub p: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EulerArgs {
    #[command(flatten)]
    pub source: SystemSource,
    #[arg(long = "n-list", value_delimiter = ',', default_values_t = DEFAULT_N_LIST)]
    pub n_list: Vec<u64>,
    /// Iterates checked against the index bounds.
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    pub k_max: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TruncateArgs {
    #[command(flatten)]
    pub source: SystemSource,
    /// Truncation level.
    #[arg(long = "N", short = 'N')]
    pub big_n: u64,
    #[arg(long, default_value = "positive")]
    pub direction: Direction,
    /// Include every generator `(orbit, k, degree)`.
    #[arg(long)]
    pub log: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Subcommand, Debug)]
pub enum ModelCommand {
    /// Orbit system of an ellipsoid boundary.
    Ellipsoid {
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<String>,
        #[arg(long)]
        numeric: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Mean-index problem of a quadratic flow on ℂPⁿ.
    Cpn {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        lambdas: Vec<String>,
        #[arg(long = "witness")]
        witnesses: Vec<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Mean Euler characteristics of a Brieskorn sphere.
    Ustilovsky {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mutation {
    /// Replace `⌊kθ⌋` by `⌊kθ⌋ + 1` in every elliptic block.
    FloorOffByOne,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Deliberately corrupt the index engine (self-test of the suite).
    #[arg(long, value_enum)]
    pub mutate: Option<Mutation>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// A rendered report and whether every verdict in it passed.
pub struct Outcome {
    pub body: String,
    pub verdicts_pass: bool,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return 1;
    }
    let (result, output) = match cli.command {
        Command::Resonance(a) => (cmd_resonance(&a), a.out.output),
        Command::Scan(a) => (cmd_scan(&a), a.out.output),
        Command::Euler(a) => (cmd_euler(&a), a.out.output),
        Command::Truncate(a) => (cmd_truncate(&a), a.out.output),
        Command::Verify(a) => (cmd_verify(&a), a.out.output),
        Command::Model { kind } => match kind {
            ModelCommand::Ellipsoid { weights, numeric, output } => (cmd_model_ellipsoid(&weights, numeric), output),
            ModelCommand::Cpn { lambdas, witnesses, output } => (cmd_model_cpn(&lambdas, &witnesses), output),
            ModelCommand::Ustilovsky { n, p, output } => (cmd_model_ustilovsky(n, p), output),
        },
    };
    match result.and_then(|o| emit(&o.body, output.as_ref()).map(|()| o.verdicts_pass)) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = value.trim().parse().with_context(|| format!("{THREADS_ENV}={value:?} is not a count"))?;
    // A second configuration in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn emit(body: &str, output: Option<&PathBuf>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Parses `name=value` witnesses.
pub fn parse_witnesses(items: &[String], table: &mut SymbolTable) -> Result<()> {
    for item in items {
        let (name, value) = item.split_once('=').ok_or_else(|| anyhow!("witness `{item}` is not name=value"))?;
        let symbol = Symbol::new(name.trim())?;
        let value: f64 = value.trim().parse().with_context(|| format!("witness value in `{item}`"))?;
        if table.contains(&symbol) {
            bail!("symbol `{name}` has two witnesses");
        }
        table.declare(symbol, Some(value))?;
    }
    Ok(())
}

/// `sqrtK` for a non-square positive integer `K`.
fn sqrt_symbol(token: &str) -> Option<f64> {
    let k: u64 = token.strip_prefix("sqrt")?.parse().ok()?;
    let r = (k as f64).sqrt();
    (k > 0 && r.fract() != 0.0).then_some(r)
}

/// ℂPⁿ eigenvalues from tokens; `sqrtK` symbols get the witness `√K`.
pub fn parse_lambdas(tokens: &[String], witnesses: &[String]) -> Result<(Vec<ExactScalar>, SymbolTable)> {
    let mut table = SymbolTable::new();
    parse_witnesses(witnesses, &mut table)?;
    let mut lambdas = Vec::with_capacity(tokens.len());
    for t in tokens {
        let t = t.trim();
        let value: ExactScalar = t.parse().with_context(|| format!("eigenvalue `{t}`"))?;
        for s in value.symbols() {
            if table.contains(s) {
                continue;
            }
            table.declare(s.clone(), sqrt_symbol(s.name()))?;
        }
        lambdas.push(value);
    }
    Ok((lambdas, table))
}

fn load_problem(src: &ProblemSource) -> Result<MeanIndexProblem> {
    match (&src.input, src.model) {
        (Some(path), None) => {
            let text = read(path)?;
            let mut problem = parse_problem_json(&text).with_context(|| format!("in {}", path.display()))?;
            if !src.witnesses.is_empty() {
                let mut table = problem.symbols().clone();
                let mut extra = SymbolTable::new();
                parse_witnesses(&src.witnesses, &mut extra)?;
                let mut merged = SymbolTable::new();
                for e in table.entries() {
                    let w = extra.witness(&e.name).or(e.witness);
                    merged.declare(e.name.clone(), w)?;
                }
                for e in extra.entries() {
                    if !merged.contains(&e.name) {
                        merged.declare(e.name.clone(), e.witness)?;
                    }
                }
                table = merged;
                problem = MeanIndexProblem::new(
                    problem.n(),
                    problem.chern(),
                    problem.deltas().to_vec(),
                    Some(problem.labels().to_vec()),
                    table,
                )?;
            }
            Ok(problem)
        }
        (None, Some(ProblemModel::Cpn)) => {
            let (lambdas, table) = parse_lambdas(&src.lambdas, &src.witnesses)?;
            Ok(cpn_mean_indices(&lambdas, table)?)
        }
        _ => bail!("give either an input file or --model"),
    }
}

/// Ellipsoid weights from tokens: rational unless a token is a float,
/// `phi`, `sqrtK`, or `--numeric` is set.
pub fn parse_weights(tokens: &[String], numeric: bool) -> Result<EllipsoidSpec> {
    let mut rationals = Vec::new();
    let mut floats = Vec::new();
    let mut all_rational = !numeric;
    for t in tokens.iter().map(|t| t.trim()) {
        let f = if t == "phi" {
            all_rational = false;
            (1.0 + 5f64.sqrt()) / 2.0
        } else if let Some(r) = sqrt_symbol(t) {
            all_rational = false;
            r
        } else if let Ok(x) = t.parse::<ExactScalar>().map(|x| x.as_rational().cloned()) {
            let Some(x) = x else { bail!("weight `{t}` is not a number") };
            rationals.push(x.clone());
            crate::exactnum::rational_to_f64(&x)
        } else {
            all_rational = false;
            t.parse::<f64>().with_context(|| format!("weight `{t}`"))?
        };
        floats.push(f);
    }
    Ok(if all_rational { EllipsoidSpec::rational(rationals)? } else { EllipsoidSpec::numeric(floats)? })
}

enum SystemInput {
    Orbits(ReebOrbitSystem),
    Ustilovsky(UstilovskySpec),
}

fn load_system(src: &SystemSource) -> Result<SystemInput> {
    match (&src.input, src.model) {
        (Some(path), None) => {
            let text = read(path)?;
            let system: ReebOrbitSystem = serde_json::from_str(&text).map_err(|e| {
                anyhow!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())
            })?;
            Ok(SystemInput::Orbits(system))
        }
        (None, Some(SystemModel::Ellipsoid)) => {
            Ok(SystemInput::Orbits(ellipsoid_system(&parse_weights(&src.weights, src.numeric)?)?))
        }
        (None, Some(SystemModel::Ustilovsky)) => {
            let (Some(n), Some(p)) = (src.n, src.p) else { bail!("the ustilovsky model needs --n and --p") };
            Ok(SystemInput::Ustilovsky(UstilovskySpec::new(n, p)?))
        }
        _ => bail!("give either an input file or --model"),
    }
}

#[derive(Serialize)]
struct ProblemSummary {
    n: u32,
    #[serde(rename = "N")]
    big_n: serde_json::Value,
    m: usize,
    labels: Vec<String>,
    deltas: Vec<String>,
}

fn summarize(p: &MeanIndexProblem) -> ProblemSummary {
    ProblemSummary {
        n: p.n(),
        big_n: match p.chern() {
            ChernNumber::Finite(n) => n.into(),
            ChernNumber::Infinite => "infinity".into(),
        },
        m: p.m(),
        labels: p.labels().to_vec(),
        deltas: p.deltas().iter().map(ToString::to_string).collect(),
    }
}

#[derive(Serialize)]
struct NumericSection {
    tol: f64,
    coeff_bound: u32,
    candidates: Vec<RelationCandidate>,
    /// Every exact basis vector within the bound appears (up to sign).
    exact_basis_recovered: bool,
}

#[derive(Serialize)]
struct ResonanceReport {
    problem: ProblemSummary,
    gamma: GammaStructure,
    theorem: TheoremOneReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<ScanReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric: Option<NumericSection>,
    consistent: bool,
}

fn numeric_section(problem: &MeanIndexProblem, tol: f64, coeff_bound: u32) -> Result<NumericSection> {
    let deltas = problem.float_deltas()?;
    let modulus = crate::exactnum::rational_to_f64(&problem.modulus()?);
    let candidates = resonance_lattice_numeric(&deltas, modulus, coeff_bound, tol)?;
    let exact = resonance_lattice_exact(problem)?;
    let bound = num_bigint::BigInt::from(coeff_bound);
    let exact_basis_recovered = exact
        .basis()
        .iter()
        .filter(|v| v.iter().all(|x| num_traits::Signed::abs(x) <= bound))
        .all(|v| {
            let v = sign_normalize(v.clone());
            candidates.iter().any(|c| c.vector.iter().zip(&v).all(|(a, b)| num_bigint::BigInt::from(*a) == *b))
        });
    Ok(NumericSection { tol, coeff_bound, candidates, exact_basis_recovered })
}

fn cmd_resonance(a: &ResonanceArgs) -> Result<Outcome> {
    let problem = load_problem(&a.source)?;
    let gamma = gamma_structure(&problem)?;
    let theorem = theorem_one_report(&problem, a.filter)?;
    let scan = a.scan.then(|| prohibited_region_scan(&problem, a.k_max, None)).transpose()?;
    let numeric = a.numeric.then(|| numeric_section(&problem, a.tol, a.coeff_bound)).transpose()?;
    let consistent = theorem.consistent() && scan.as_ref().is_none_or(ScanReport::clean);
    let report = ResonanceReport { problem: summarize(&problem), gamma, theorem, scan, numeric, consistent };
    let body = match a.out.format {
        Format::Json => to_json(&report)?,
        Format::Text => resonance_text(&report),
        Format::Csv => {
            let mut s = String::from("row");
            for l in &report.problem.labels {
                s.push(',');
                s.push_str(l);
            }
            s.push('\n');
            for (i, row) in report.gamma.resonance_lattice.basis().iter().enumerate() {
                let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
                let _ = writeln!(s, "{i},{}", cells.join(","));
            }
            s
        }
    };
    Ok(Outcome { body, verdicts_pass: consistent })
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn theorem_text(out: &mut String, t: &TheoremOneReport, indent: &str) {
    let _ = writeln!(out, "{indent}indices: {}", t.labels.join(", "));
    if t.vacuous {
        let _ = writeln!(out, "{indent}vacuous: no indices left");
        return;
    }
    let _ = writeln!(out, "{indent}rank: {}  nontrivial: {}", t.rank, yes(t.nontrivial));
    if let Some(g) = &t.generator {
        let cells: Vec<String> = g.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{indent}generator: ({})", cells.join(", "));
        let _ = writeln!(out, "{indent}nonnegative: {}", yes(t.generator_nonnegative == Some(true)));
    }
    if let (Some(s), Some(b)) = (&t.sum_value, &t.bound_value) {
        let _ = writeln!(out, "{indent}sum: {s}  bound: {b}  satisfied: {}", yes(t.sum_bound_satisfied == Some(true)));
    }
    if let Some(d) = &t.diagonal {
        let _ = writeln!(
            out,
            "{indent}diagonal: t = {}  threshold = {}  inside prohibited: {}",
            d.t_value,
            d.threshold,
            yes(d.inside_prohibited)
        );
    }
    for w in &t.warnings {
        let _ = writeln!(out, "{indent}warning: {w}");
    }
}

fn resonance_text(r: &ResonanceReport) -> String {
    let mut out = String::new();
    let p = &r.problem;
    let _ = writeln!(out, "n = {}, N = {}, m = {}", p.n, p.big_n, p.m);
    for (l, d) in p.labels.iter().zip(&p.deltas) {
        let _ = writeln!(out, "  {l}: {d}");
    }
    let g = &r.gamma;
    let _ = writeln!(
        out,
        "rk R = {}, codim Gamma = {}, dim Gamma0 = {}, |Gamma/Gamma0| = {}",
        g.rank_r, g.codim_gamma, g.dim_gamma0, g.torsion_order
    );
    let _ = write!(out, "resonance basis:\n{}", matrix_to_text(g.resonance_lattice.basis()));
    theorem_text(&mut out, &r.theorem, "");
    if let Some(f) = &r.theorem.filtered_variant {
        let _ = writeln!(out, "filtered ({:?}):", f.filter);
        theorem_text(&mut out, f, "  ");
    }
    if let Some(s) = &r.scan {
        scan_text(&mut out, s);
    }
    if let Some(nm) = &r.numeric {
        let _ = writeln!(out, "numeric candidates (tol {:e}, bound {}):", nm.tol, nm.coeff_bound);
        for c in &nm.candidates {
            let _ = writeln!(out, "  {:?} residual {}", c.vector, sig12(c.residual));
        }
    }
    let _ = writeln!(out, "verdict: {}", if r.consistent { "consistent" } else { "inconsistent" });
    out
}

fn scan_text(out: &mut String, s: &ScanReport) {
    let _ = writeln!(out, "scan: k ≤ {}, arc [0, {}]", s.k_max, sig12(s.arc_end));
    match &s.first_violation {
        Some(v) => {
            let _ = writeln!(out, "  first violation at k = {}: {:?}", v.k, v.point);
        }
        None => {
            let _ = writeln!(out, "  no violation");
        }
    }
    let _ = writeln!(out, "  violations: {}  min margin: {} at k = {}", s.violation_count, sig12(s.min_margin), s.min_margin_k);
    let _ = writeln!(out, "  margin histogram: {:?}", s.margin_histogram);
}

fn cmd_scan(a: &ScanArgs) -> Result<Outcome> {
    let problem = load_problem(&a.source)?;
    let scan = prohibited_region_scan(&problem, a.k_max, None)?;
    let body = match a.out.format {
        Format::Json => to_json(&scan)?,
        Format::Text => {
            let mut s = String::new();
            scan_text(&mut s, &scan);
            s
        }
        Format::Csv => {
            let mut s = String::from("bin_low,bin_high,count\n");
            let width = scan.arc_end / scan.margin_histogram.len() as f64;
            for (i, c) in scan.margin_histogram.iter().enumerate() {
                let _ = writeln!(s, "{},{},{c}", sig12(i as f64 * width), sig12((i + 1) as f64 * width));
            }
            s
        }
    };
    Ok(Outcome { body, verdicts_pass: scan.clean() })
}

#[derive(Serialize)]
struct UstilovskyReport {
    model: &'static str,
    n: u32,
    p: u64,
    chi_plus: ChiValue,
    chi_minus: ChiValue,
}

#[derive(Serialize)]
struct EulerCliReport {
    n: u32,
    orbits: usize,
    closed_form: EulerReport,
    limits: Vec<LimitComparison>,
    morse: Vec<MorseReport>,
    index_bounds: IndexBoundsReport,
    warnings: Vec<String>,
    notes: Vec<String>,
    verdicts_pass: bool,
}

fn cmd_euler(a: &EulerArgs) -> Result<Outcome> {
    let system = match load_system(&a.source)? {
        SystemInput::Ustilovsky(spec) => {
            let (plus, minus) = ustilovsky_chi(spec)?;
            let r = UstilovskyReport {
                model: "ustilovsky",
                n: spec.n,
                p: spec.p,
                chi_plus: ChiValue::Exact(plus),
                chi_minus: ChiValue::Exact(minus),
            };
            let body = match a.out.format {
                Format::Json => to_json(&r)?,
                Format::Text => format!("chi+ = {}\nchi- = {}\n", r.chi_plus, r.chi_minus),
                Format::Csv => format!("n,p,chi_plus,chi_minus\n{},{},{},{}\n", r.n, r.p, r.chi_plus, r.chi_minus),
            };
            return Ok(Outcome { body, verdicts_pass: true });
        }
        SystemInput::Orbits(s) => s,
    };
    let closed_form = euler_report(&system)?;
    let mut limits = Vec::new();
    let mut morse = Vec::new();
    let mut notes = Vec::new();
    for dir in [Direction::Positive, Direction::Negative] {
        if !system.orbits.iter().any(|o| dir.includes(o.mean_index.to_f64())) {
            continue;
        }
        match chi_limit_compare_or_note(&system, dir, &a.n_list) {
            Ok((cmp, m)) => {
                limits.push(cmp);
                morse.push(m);
            }
            Err(ContactError::LawUndefined { orbit, k, reason }) => notes.push(format!(
                "{dir} truncated route unavailable: orbit `{orbit}` at k = {k}: {reason}; closed form only"
            )),
            Err(e) => return Err(e.into()),
        }
    }
    let index_bounds = validate_index_bounds(&system, a.k_max)?;
    let verdicts_pass = limits.iter().all(|l| l.within_envelope)
        && morse.iter().all(|m| m.satisfied)
        && index_bounds.clean();
    let report = EulerCliReport {
        n: system.n,
        orbits: system.orbits.len(),
        closed_form,
        limits,
        morse,
        index_bounds,
        warnings: system.warnings(),
        notes,
        verdicts_pass,
    };
    let body = match a.out.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = LIMIT_CSV_HEADER.to_string();
            for l in &report.limits {
                s.push_str(&limit_series_csv_rows(l));
            }
            s
        }
        Format::Text => euler_text(&report),
    };
    Ok(Outcome { body, verdicts_pass })
}

fn chi_limit_compare_or_note(
    system: &ReebOrbitSystem,
    dir: Direction,
    n_list: &[u64],
) -> Result<(LimitComparison, MorseReport), ContactError> {
    Ok((crate::contact::chi_limit_compare(system, dir, n_list)?, asymptotic_morse(system, dir, n_list)?))
}

fn euler_text(r: &EulerCliReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n = {}, {} simple orbits", r.n, r.orbits);
    let _ = writeln!(out, "chi+ = {}", r.closed_form.chi_plus);
    let _ = writeln!(out, "chi- = {}", r.closed_form.chi_minus);
    let _ = writeln!(out, "mean = {}", r.closed_form.chi_mean);
    for l in &r.limits {
        let _ = writeln!(out, "{} truncation (C_theory = {}, C_fit = {}):", l.direction, sig12(l.c_theory), sig12(l.c_fit));
        for row in &l.rows {
            let _ = writeln!(
                out,
                "  N = {:>7}  chi = {:>7}  chi/N = {:<16} |diff| = {}",
                row.big_n,
                row.chi,
                sig12(row.normalized),
                sig12(row.difference)
            );
        }
        for d in &l.diagnostics {
            let _ = writeln!(out, "  diagnostic: {d}");
        }
    }
    for m in &r.morse {
        let _ = writeln!(
            out,
            "{} Morse: lhs = {}  density = {:?}  satisfied: {}",
            m.direction,
            m.lhs,
            m.empirical_rhs,
            yes(m.satisfied)
        );
    }
    let _ = writeln!(out, "index bounds (k ≤ {}): {} violations", r.index_bounds.k_max, r.index_bounds.violations.len());
    for v in r.index_bounds.violations.iter().take(20) {
        let _ = writeln!(out, "  {} k = {} {:?} margin {}", v.orbit, v.k, v.bound, sig12(v.margin));
    }
    for w in r.warnings.iter().chain(&r.notes) {
        let _ = writeln!(out, "note: {w}");
    }
    let _ = writeln!(out, "verdict: {}", if r.verdicts_pass { "pass" } else { "fail" });
    out
}

#[derive(Serialize)]
struct TruncateReport {
    complex: TruncatedComplex,
    chi: ChiTruncated,
    closed_form: ChiValue,
    dimension_bound: u64,
}

fn cmd_truncate(a: &TruncateArgs) -> Result<Outcome> {
    let SystemInput::Orbits(system) = load_system(&a.source)? else {
        bail!("the ustilovsky model has no orbit catalogue to truncate");
    };
    let complex = build_truncated_complex(&system, a.big_n, a.direction, a.log)?;
    let chi = chi_truncated(&complex);
    let closed_form = chi_closed_form(&system, a.direction)?;
    let dimension_bound = system.window_dimension_bound()?;
    let verdicts_pass = complex.index_bound_violations.is_empty() && complex.max_dim() <= dimension_bound;
    let report = TruncateReport { complex, chi, closed_form, dimension_bound };
    let body = match a.out.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("degree,dim\n");
            for (d, c) in &report.complex.dims {
                let _ = writeln!(s, "{d},{c}");
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let c = &report.complex;
            let _ = writeln!(s, "{} window [{}, {}], N = {}", c.direction, c.window.0, c.window.1, c.big_n);
            let _ = writeln!(s, "generators: {}  max dim: {} (bound {})", c.total_generators(), c.max_dim(), report.dimension_bound);
            let _ = writeln!(s, "chi = {}  chi/N = {}  closed form = {}", report.chi.chi_value, sig12(report.chi.normalized), report.closed_form);
            s
        }
    };
    Ok(Outcome { body, verdicts_pass })
}

fn cmd_model_ellipsoid(weights: &[String], numeric: bool) -> Result<Outcome> {
    let system = ellipsoid_system(&parse_weights(weights, numeric)?)?;
    Ok(Outcome { body: to_json(&system)?, verdicts_pass: true })
}

fn cmd_model_cpn(lambdas: &[String], witnesses: &[String]) -> Result<Outcome> {
    let (lambdas, table) = parse_lambdas(lambdas, witnesses)?;
    let problem = cpn_mean_indices(&lambdas, table)?;
    Ok(Outcome { body: to_json(&ProblemFile::from_problem(&problem))?, verdicts_pass: true })
}

fn cmd_model_ustilovsky(n: u32, p: u64) -> Result<Outcome> {
    let spec = UstilovskySpec::new(n, p)?;
    let (plus, minus) = ustilovsky_chi(spec)?;
    let r = UstilovskyReport { model: "ustilovsky", n, p, chi_plus: ChiValue::Exact(plus), chi_minus: ChiValue::Exact(minus) };
    Ok(Outcome { body: to_json(&r)?, verdicts_pass: true })
}

/// One line of the invariant suite.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub mutation: Option<String>,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

fn check(name: &str, cases: usize, failures: Vec<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: failures.is_empty(),
        cases,
        detail: if failures.is_empty() {
            "ok".into()
        } else {
            format!("{} failure(s); first: {}", failures.len(), failures[0])
        },
    }
}

/// A copy of `system` whose block laws are replaced by tables computed with
/// `⌊kθ⌋ + 1` (long enough for truncation at `N ≤ n_max`).
fn mutate_floor(system: &ReebOrbitSystem, n_max: u64) -> Result<ReebOrbitSystem> {
    let orbits = system
        .orbits
        .iter()
        .map(|o| {
            let CzLaw::Blocks(map) = &o.cz_law else { return Ok(o.clone()) };
            let elliptic = map.elliptic_count();
            let k_hi = ((n_max as f64 + 2.0 * f64::from(system.n)) / o.mean_index.to_f64().abs()).ceil() as u64 + 2;
            let values = (1..=k_hi)
                .map(|k| Ok(map.mu(k)? + 2 * elliptic as i64))
                .collect::<Result<Vec<_>, crate::models::ModelError>>()?;
            Ok(ReebOrbit::new(o.name.clone(), o.class, o.mean_index.clone(), CzLaw::Table { values, extrapolate: false }, None, system.n)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReebOrbitSystem::new(system.n, orbits, system.homotopy_note.clone(), system.cf2_enforced)?)
}

/// Runs every invariant on seeded random instances.
pub fn verify_suite(seed: u64, mutation: Option<Mutation>) -> Result<VerifySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // duality between Γ and ℛ
    let mut failures = Vec::new();
    let problems: Vec<_> = (0..100).map(|_| synth::random_exact_problem(&mut rng, 6)).collect();
    for (i, p) in problems.iter().enumerate() {
        match gamma_structure(p) {
            Ok(g) => {
                let idx = lattice_index(&g.resonance_lattice, &g.saturation)?;
                if g.codim_gamma != g.rank_r || idx.finite() != Some(&g.torsion_order) || !idx.is_cyclic() {
                    failures.push(format!("problem {i}"));
                }
            }
            Err(e) => failures.push(format!("problem {i}: {e}")),
        }
    }
    checks.push(check("duality", problems.len(), failures));

    // ℂPⁿ diagonal resonance and theorem verdicts
    let mut failures = Vec::new();
    for n in 2..=4usize {
        let lambdas: Vec<ExactScalar> =
            (0..=n).map(|i| ExactScalar::symbol(Symbol::new(format!("l{i}")).unwrap())).collect();
        let p = cpn_mean_indices(&lambdas, SymbolTable::new())?;
        let rep = theorem_one_report(&p, IndexFilter::None)?;
        if !(rep.rank_one && rep.consistent() && rep.sum_value == Some((n as i64 + 1).into())) {
            failures.push(format!("n = {n}"));
        }
    }
    checks.push(check("cpn-theorem", 3, failures));

    // two routes to χ±, certified by the index bounds
    let mut failures = Vec::new();
    let n_list = [100u64, 1000];
    let mut systems: Vec<ReebOrbitSystem> = (0..12).map(|_| synth::random_engine_system(&mut rng, 0.3)).collect();
    systems.push(ellipsoid_system(&EllipsoidSpec::numeric(vec![1.0, (1.0 + 5f64.sqrt()) / 2.0])?)?);
    if mutation == Some(Mutation::FloorOffByOne) {
        systems = systems.iter().map(|s| mutate_floor(s, 1000)).collect::<Result<_>>()?;
    }
    for (i, s) in systems.iter().enumerate() {
        let bounds = validate_index_bounds(s, 500)?;
        if !bounds.clean() {
            failures.push(format!("system {i}: index bounds fail at k = {}", bounds.violations[0].k));
            continue;
        }
        for dir in [Direction::Positive, Direction::Negative] {
            let cmp = crate::contact::chi_limit_compare(s, dir, &n_list)?;
            if !cmp.within_envelope {
                failures.push(format!("system {i} {dir}: {}", cmp.diagnostics.join("; ")));
            }
        }
    }
    checks.push(check("two-route-agreement", systems.len(), failures));

    // standard sphere: Σ 1/Δⱼ = 1/2 for rational weights
    let mut failures = Vec::new();
    for i in 0..50 {
        let n = rand::Rng::gen_range(&mut rng, 2..=6usize);
        let spec = EllipsoidSpec::rational(synth::random_rational_weights(&mut rng, n))?;
        let sys = ellipsoid_system(&spec)?;
        let plus = chi_closed_form(&sys, Direction::Positive)?;
        let minus = chi_closed_form(&sys, Direction::Negative)?;
        if plus.exact() != Some(&crate::exactnum::rat(1, 2)) || minus.exact() != Some(&crate::exactnum::rat(0, 1)) {
            failures.push(format!("weights #{i}: χ⁺ = {plus}, χ⁻ = {minus}"));
        }
    }
    checks.push(check("ellipsoid-half", 50, failures));

    // parity law of the engine
    let mut failures = Vec::new();
    for i in 0..50 {
        let n = rand::Rng::gen_range(&mut rng, 2..=5u32);
        let map: LinearizedReturnMap = synth::random_return_map(&mut rng, n, 0.3);
        let bad = map.negative_hyperbolic_count() % 2 == 1;
        let p1 = map.mu(1)?.rem_euclid(2);
        for k in 2..=64u64 {
            let expect = if bad { (p1 + k as i64 - 1).rem_euclid(2) } else { p1 };
            if map.mu(k)?.rem_euclid(2) != expect {
                failures.push(format!("map #{i} at k = {k}"));
                break;
            }
        }
    }
    checks.push(check("parity-law", 50, failures));

    // Brieskorn spheres: increasing in p, above 1/2 for p > 1
    let mut failures = Vec::new();
    for n in [3u32, 5, 7] {
        let values: Vec<_> = admissible_p(10)
            .into_iter()
            .map(|p| ustilovsky_chi(UstilovskySpec { n, p }).map(|v| v.0))
            .collect::<Result<_, _>>()?;
        if values[0] != crate::exactnum::rat(1, 2)
            || !values.windows(2).all(|w| w[0] < w[1])
            || !values[1..].iter().all(|v| *v > crate::exactnum::rat(1, 2))
        {
            failures.push(format!("n = {n}"));
        }
    }
    checks.push(check("ustilovsky-monotone", 3, failures));

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifySummary { seed, mutation: mutation.map(|m| format!("{m:?}")), checks, all_passed })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let summary = verify_suite(a.seed, a.mutate)?;
    let body = match a.out.format {
        Format::Json => to_json(&summary)?,
        Format::Text => {
            let mut s = format!("seed {}\n", summary.seed);
            for c in &summary.checks {
                let _ = writeln!(s, "[{}] {} ({} cases): {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.cases, c.detail);
            }
            s
        }
        Format::Csv => {
            let mut s = String::from("check,passed,cases\n");
            for c in &summary.checks {
                let _ = writeln!(s, "{},{},{}", c.name, c.passed, c.cases);
            }
            s
        }
    };
    Ok(Outcome { body, verdicts_pass: summary.all_passed })
}
