//! Command-line front end.
//!
//! One subcommand per pipeline stage plus `verify`, which re-runs a
//! pipeline answer against an exhaustive reference and fails loudly on
//! disagreement. Every command emits either a plain-text summary or,
//! with `--json`, a single-line report in a stable schema.
//!
//! Exit codes: 0 success (including a reported promise violation in
//! `grover`), 2 bad input or usage, 3 capacity exceeded, 4 verification
//! mismatch.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::boolmean::{boolean_mean, family_for, BooleanOracle};
use crate::config::{Backend, PipelineConfig};
use crate::domain::{Potential, SmoothIntegrand};
use crate::error::{Error, Result};
use crate::integrate::integrate_weighted;
use crate::ledger::QueryLedger;
use crate::minimize::{min_index, min_value, BoundedVector};
use crate::oracle::{brute_sat, brute_tsp, quadrature};
use crate::qpe::estimate_lambda;
use crate::report::{digest_inputs, Report};
use crate::sat::{cnf_oracle, parse_dimacs, sat_decide, sat_search, CnfFormula};
use crate::tsp::{parse_distance_matrix, tsp_decide, tsp_optimal_tour};
use crate::Engine;

const VERIFY_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Parser)]
#[command(
    name = "slq",
    version,
    about = "Eigenvalue, integration, and search pipeline with query accounting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    globals: Globals,
}

#[derive(Args, Clone)]
struct Globals {
    /// Failure probability budget for the whole command.
    #[arg(long, global = true, default_value_t = 0.05)]
    delta: f64,
    /// Accuracy target, for commands that take one.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Query backend: classical, spectral, or dense.
    #[arg(long, global = true, value_parser = parse_backend)]
    backend: Option<Backend>,
    /// Random seed; a fixed seed reproduces the report byte for byte.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print the report as one JSON line instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    /// Reject DIMACS files whose clause count disagrees with the header.
    #[arg(long, global = true)]
    strict_dimacs: bool,
    /// TOML file overriding the pipeline configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for repetition batches; never changes results.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the smallest eigenvalue for a potential.
    Eigen {
        /// Potential: const:<v>, linear:<a>,<b>, sine:<amp>,<freq>, or
        /// file:<path> with one sample per line, interpolated cubically.
        #[arg(long)]
        q: String,
        /// Eigenvalue accuracy.
        #[arg(long)]
        eta: f64,
    },
    /// Integrate f(x) sin^2(pi x) over [0,1] to within --epsilon.
    Integrate {
        /// Integrand, same expression forms as a potential.
        #[arg(long)]
        f: String,
        /// Smoothness-class bound; defaults to the bound the expression
        /// itself implies and may only be raised.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Estimate the fraction of inputs a Boolean function accepts.
    Mean {
        #[command(flatten)]
        source: BoolArgs,
    },
    /// Satisfiability of a CNF formula or truth table.
    Sat {
        #[command(subcommand)]
        action: SatAction,
    },
    /// Recover the unique accepted input of a promise function.
    Grover {
        #[command(flatten)]
        source: BoolArgs,
    },
    /// Minimum of a bounded vector.
    Min {
        #[command(subcommand)]
        action: MinAction,
    },
    /// Shortest travelling-salesman tours.
    Tsp {
        #[command(subcommand)]
        action: TspAction,
    },
    /// Re-check a pipeline answer against an exhaustive reference.
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
}

#[derive(Subcommand)]
enum SatAction {
    /// Decide whether any assignment satisfies the formula.
    Decide {
        #[command(flatten)]
        source: BoolArgs,
    },
    /// Find the smallest satisfying assignment index.
    Search {
        #[command(flatten)]
        source: BoolArgs,
    },
}

#[derive(Subcommand)]
enum MinAction {
    /// Locate the minimum value to within --epsilon (default 1/3).
    Value {
        #[command(flatten)]
        source: VecArgs,
    },
    /// Find an index whose entry is within --epsilon of the minimum.
    Index {
        #[command(flatten)]
        source: VecArgs,
    },
}

#[derive(Subcommand)]
enum TspAction {
    /// Decide whether some tour has length at most --limit.
    Decide {
        /// Distance matrix file: JSON {"m":..,"d":[[..]]} or whitespace
        /// tokens, the city count first and then the m*m entries.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Tour length threshold.
        #[arg(long)]
        limit: u64,
    },
    /// Length of the shortest tour.
    Length {
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
    },
    /// A shortest tour and its length.
    Tour {
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
    },
}

#[derive(Subcommand)]
enum VerifyAction {
    /// sat decide + search against exhaustive enumeration.
    Sat {
        #[command(flatten)]
        source: BoolArgs,
    },
    /// tsp tour against a brute-force scan over all tours.
    Tsp {
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
    },
    /// mean against an exact acceptance count.
    Mean {
        #[command(flatten)]
        source: BoolArgs,
    },
    /// integrate against adaptive quadrature.
    Integrate {
        #[arg(long)]
        f: String,
        #[arg(long)]
        bound: Option<f64>,
    },
}

#[derive(Args, Clone)]
struct BoolArgs {
    /// DIMACS CNF file.
    #[arg(long, value_name = "FILE", conflicts_with = "bits")]
    cnf: Option<PathBuf>,
    /// Inline truth table: one 0/1 character per input, index 0 first;
    /// padded with zeros to the next power of two.
    #[arg(long, value_name = "BITS")]
    bits: Option<String>,
}

#[derive(Args, Clone)]
struct VecArgs {
    /// File with one entry per line.
    #[arg(long, value_name = "FILE", conflicts_with = "values")]
    vector: Option<PathBuf>,
    /// Inline comma-separated entries.
    #[arg(long, value_name = "LIST")]
    values: Option<String>,
    /// Magnitude bound on the entries; defaults to the largest
    /// magnitude present, at least 1.
    #[arg(long)]
    bound: Option<f64>,
}

fn parse_backend(s: &str) -> std::result::Result<Backend, String> {
    s.parse::<Backend>().map_err(|e| e.to_string())
}

/// Parses command-line arguments, runs the command, and prints the
/// report; returns the process exit code.
pub fn run() -> u8 {
    let cli = Cli::parse();
    let json = cli.globals.json;
    match execute(cli) {
        Ok(report) => {
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    }
}

struct Session {
    engine: Engine,
    backend: Backend,
    delta: f64,
    seed: u64,
    strict_dimacs: bool,
    epsilon: Option<f64>,
    config_text: String,
    started: Instant,
}

impl Session {
    fn open(globals: &Globals) -> Result<Session> {
        if globals.threads == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        let config_text = match &globals.config {
            Some(path) => std::fs::read_to_string(path)?,
            None => String::new(),
        };
        let mut config = if config_text.is_empty() {
            PipelineConfig::default()
        } else {
            PipelineConfig::from_toml_str(&config_text)?
        };
        let backend = globals.backend.unwrap_or(config.backend);
        config.backend = backend;
        let engine = Engine::new(config, backend, globals.seed).with_threads(globals.threads);
        Ok(Session {
            engine,
            backend,
            delta: globals.delta,
            seed: globals.seed,
            strict_dimacs: globals.strict_dimacs,
            epsilon: globals.epsilon,
            config_text,
            started: Instant::now(),
        })
    }

    fn require_epsilon(&self) -> Result<f64> {
        self.epsilon
            .ok_or_else(|| Error::InvalidInput("--epsilon is required for this command".into()))
    }

    fn digest(&self, task: &str, inputs: &[&str], params: &str) -> String {
        let mut parts = vec![task];
        parts.extend_from_slice(inputs);
        parts.push(params);
        parts.push(&self.config_text);
        digest_inputs(&parts)
    }

    fn report(
        &self,
        task: &str,
        digest: String,
        result: serde_json::Value,
        eta: f64,
        ledger: QueryLedger,
    ) -> Report {
        Report {
            task: task.into(),
            inputs_digest: digest,
            result,
            eta,
            delta: self.delta,
            backend: self.backend,
            ledger,
            seed: self.seed,
            wall_time: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn execute(cli: Cli) -> Result<Report> {
    let mut session = Session::open(&cli.globals)?;
    match cli.command {
        Command::Eigen { q, eta } => run_eigen(&mut session, &q, eta),
        Command::Integrate { f, bound } => run_integrate(&mut session, &f, bound),
        Command::Mean { source } => run_mean(&mut session, &source),
        Command::Sat { action } => match action {
            SatAction::Decide { source } => run_sat_decide(&mut session, &source),
            SatAction::Search { source } => run_sat_search(&mut session, &source),
        },
        Command::Grover { source } => run_grover(&mut session, &source),
        Command::Min { action } => match action {
            MinAction::Value { source } => run_min_value(&mut session, &source),
            MinAction::Index { source } => run_min_index(&mut session, &source),
        },
        Command::Tsp { action } => match action {
            TspAction::Decide { matrix, limit } => run_tsp_decide(&mut session, &matrix, limit),
            TspAction::Length { matrix } => run_tsp_tour(&mut session, &matrix, false),
            TspAction::Tour { matrix } => run_tsp_tour(&mut session, &matrix, true),
        },
        Command::Verify { action } => match action {
            VerifyAction::Sat { source } => run_verify_sat(&mut session, &source),
            VerifyAction::Tsp { matrix } => run_verify_tsp(&mut session, &matrix),
            VerifyAction::Mean { source } => run_verify_mean(&mut session, &source),
            VerifyAction::Integrate { f, bound } => run_verify_integrate(&mut session, &f, bound),
        },
    }
}

fn run_eigen(session: &mut Session, spec: &str, eta: f64) -> Result<Report> {
    let expr = Expr::parse(spec)?;
    let q = expr.potential();
    q.check_admissible(session.engine.config.admissibility_grid)?;
    let est = estimate_lambda(&mut session.engine, &q, eta, session.delta)?;
    let mut result = serde_json::json!({ "lambda": est.value });
    if let Some(shift) = est.shift_from_reference {
        result["shift_from_reference"] = serde_json::json!(shift);
    }
    let params = format!(
        "eta={eta} delta={} backend={}",
        session.delta, session.backend
    );
    let digest = session.digest("eigen", &[spec, expr.digest_part()], &params);
    Ok(session.report("eigen", digest, result, eta, est.ledger))
}

fn run_integrate(session: &mut Session, spec: &str, bound: Option<f64>) -> Result<Report> {
    let eps = session.require_epsilon()?;
    let expr = Expr::parse(spec)?;
    let f = expr.integrand(bound)?;
    let est = integrate_weighted(&mut session.engine, &f, eps, session.delta)?;
    let result = serde_json::json!({ "integral": est.value, "trivial": est.trivial });
    let params = format!(
        "epsilon={eps} bound={} delta={} backend={}",
        f.bound_m, session.delta, session.backend
    );
    let digest = session.digest("integrate", &[spec, expr.digest_part()], &params);
    Ok(session.report("integrate", digest, result, eps, est.ledger))
}

fn run_mean(session: &mut Session, source: &BoolArgs) -> Result<Report> {
    let eps = session.require_epsilon()?;
    let input = BoolInput::load(source, session.strict_dimacs)?;
    let b = input.oracle();
    let est = boolean_mean(&mut session.engine, &b, eps, session.delta)?;
    let result = serde_json::json!({
        "mean": est.value,
        "count": est.count,
        "domain": b.domain(),
    });
    let params = format!(
        "epsilon={eps} delta={} backend={}",
        session.delta, session.backend
    );
    let digest = session.digest("mean", &[input.digest_part()], &params);
    Ok(session.report("mean", digest, result, eps, est.ledger))
}

fn run_sat_decide(session: &mut Session, source: &BoolArgs) -> Result<Report> {
    let input = BoolInput::load(source, session.strict_dimacs)?;
    let b = input.oracle();
    let eta = 1.0 / (3.0 * b.domain() as f64);
    let decision = sat_decide(&mut session.engine, &b, session.delta)?;
    let result = serde_json::json!({
        "satisfiable": decision.yes,
        "count": decision.count_estimate,
        "domain": b.domain(),
    });
    let params = format!("delta={} backend={}", session.delta, session.backend);
    let digest = session.digest("sat-decide", &[input.digest_part()], &params);
    Ok(session.report("sat-decide", digest, result, eta, decision.ledger))
}

fn run_sat_search(session: &mut Session, source: &BoolArgs) -> Result<Report> {
    let input = BoolInput::load(source, session.strict_dimacs)?;
    let b = input.oracle();
    let eta = 1.0 / (3.0 * b.domain() as f64);
    let search = sat_search(&mut session.engine, &b, session.delta)?;
    let assignment = search.witness.map(|w| assignment_bits(w, b.vars()));
    let result = serde_json::json!({
        "witness": search.witness,
        "candidate": search.candidate,
        "assignment": assignment,
    });
    let params = format!("delta={} backend={}", session.delta, session.backend);
    let digest = session.digest("sat-search", &[input.digest_part()], &params);
    Ok(session.report("sat-search", digest, result, eta, search.ledger))
}

fn run_grover(session: &mut Session, source: &BoolArgs) -> Result<Report> {
    let input = BoolInput::load(source, session.strict_dimacs)?;
    let b = input.oracle();
    let fam = family_for(&session.engine, b.domain())?;
    let eta = fam.int_h / (48.0 * (b.domain() as f64).powi(4));
    let outcome = crate::grover::grover_find(&mut session.engine, &b, session.delta)?;
    let status = if outcome.confirmed() {
        "confirmed"
    } else {
        "promise violated or unlucky run"
    };
    let result = serde_json::json!({
        "index": outcome.index,
        "candidate": outcome.candidate,
        "status": status,
    });
    let params = format!("delta={} backend={}", session.delta, session.backend);
    let digest = session.digest("grover", &[input.digest_part()], &params);
    Ok(session.report("grover", digest, result, eta, outcome.ledger))
}

fn run_min_value(session: &mut Session, source: &VecArgs) -> Result<Report> {
    let eps = session.epsilon.unwrap_or(1.0 / 3.0);
    let (x, digest_part) = load_vector(source)?;
    let outcome = min_value(&mut session.engine, &x, eps, session.delta)?;
    let result = serde_json::json!({
        "value": outcome.value,
        "interval": [outcome.interval.0, outcome.interval.1],
    });
    let params = format!(
        "epsilon={eps} bound={} delta={} backend={}",
        x.bound(),
        session.delta,
        session.backend
    );
    let digest = session.digest("min-value", &[&digest_part], &params);
    Ok(session.report("min-value", digest, result, eps, outcome.ledger))
}

fn run_min_index(session: &mut Session, source: &VecArgs) -> Result<Report> {
    let eps = session.epsilon.unwrap_or(1.0 / 3.0);
    let (x, digest_part) = load_vector(source)?;
    let outcome = min_index(&mut session.engine, &x, eps, session.delta)?;
    let result = serde_json::json!({
        "index": outcome.index,
        "value": outcome.value,
        "threshold": outcome.threshold,
        "verified": outcome.verified,
    });
    let params = format!(
        "epsilon={eps} bound={} delta={} backend={}",
        x.bound(),
        session.delta,
        session.backend
    );
    let digest = session.digest("min-index", &[&digest_part], &params);
    Ok(session.report("min-index", digest, result, eps, outcome.ledger))
}

fn run_tsp_decide(session: &mut Session, matrix: &Path, limit: u64) -> Result<Report> {
    let text = std::fs::read_to_string(matrix)?;
    let d = parse_distance_matrix(&text)?;
    let decision = tsp_decide(&mut session.engine, &d, limit, session.delta)?;
    let result = serde_json::json!({
        "yes": decision.yes,
        "optimal_estimate": decision.optimal_estimate,
        "bound": decision.bound,
    });
    let params = format!(
        "limit={limit} delta={} backend={}",
        session.delta, session.backend
    );
    let digest = session.digest("tsp-decide", &[&text], &params);
    Ok(session.report("tsp-decide", digest, result, 1.0 / 3.0, decision.ledger))
}

fn run_tsp_tour(session: &mut Session, matrix: &Path, with_tour: bool) -> Result<Report> {
    let text = std::fs::read_to_string(matrix)?;
    let d = parse_distance_matrix(&text)?;
    let outcome = tsp_optimal_tour(&mut session.engine, &d, session.delta)?;
    let task = if with_tour { "tsp-tour" } else { "tsp-length" };
    let mut result = serde_json::json!({
        "length": outcome.length,
        "bound": outcome.bound,
        "verified": outcome.verified,
    });
    if with_tour {
        result["tour"] = serde_json::json!(outcome.tour);
    }
    let params = format!("delta={} backend={}", session.delta, session.backend);
    let digest = session.digest(task, &[&text], &params);
    Ok(session.report(task, digest, result, 1.0 / 3.0, outcome.ledger))
}

fn run_verify_sat(session: &mut Session, source: &BoolArgs) -> Result<Report> {
    let input = BoolInput::load(source, session.strict_dimacs)?;
    let b = input.oracle();
    let eta = 1.0 / (3.0 * b.domain() as f64);
    let decision = sat_decide(&mut session.engine, &b, session.delta)?;
    let search = sat_search(&mut session.engine, &b, session.delta)?;
    let (expect_yes, expect_witness) = brute_sat(&|j| input.plain_eval(j), b.vars())?;
    let exact_count = input.exact_count()?;
    if decision.yes != expect_yes {
        return Err(Error::VerifyMismatch(format!(
            "decide said {}, enumeration said {}",
            decision.yes, expect_yes
        )));
    }
    if decision.count_estimate != exact_count {
        return Err(Error::VerifyMismatch(format!(
            "decide counted {}, enumeration counted {}",
            decision.count_estimate, exact_count
        )));
    }
    if search.witness != expect_witness {
        return Err(Error::VerifyMismatch(format!(
            "search returned {:?}, enumeration found {:?}",
            search.witness, expect_witness
        )));
    }
    let mut ledger = decision.ledger;
    ledger.merge(&search.ledger);
    let result = serde_json::json!({
        "match": true,
        "satisfiable": decision.yes,
        "count": exact_count,
        "witness": search.witness,
    });
    let params = format!("delta={} backend={}", session.delta, session.backend);
    let digest = session.digest("verify-sat", &[input.digest_part()], &params);
    Ok(session.report("verify-sat", digest, result, eta, ledger))
}

fn run_verify_tsp(session: &mut Session, matrix: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(matrix)?;
    let d = parse_distance_matrix(&text)?;
    let outcome = tsp_optimal_tour(&mut session.engine, &d, session.delta)?;
    let (expect_length, expect_tour) = brute_tsp(d.cities(), d.rows())?;
    if outcome.length != expect_length {
        return Err(Error::VerifyMismatch(format!(
            "tour search found length {}, brute force found {}",
            outcome.length, expect_length
        )));
    }
    if outcome.tour != expect_tour {
        return Err(Error::VerifyMismatch(format!(
            "tour search returned {:?}, brute force returned {:?}",
            outcome.tour, expect_tour
        )));
    }
    let result = serde_json::json!({
        "match": true,
        "length": outcome.length,
        "tour": outcome.tour,
    });
    let params = format!("delta={} backend={}", session.delta, session.backend);
    let digest = session.digest("verify-tsp", &[&text], &params);
    Ok(session.report("verify-tsp", digest, result, 1.0 / 3.0, outcome.ledger))
}

fn run_verify_mean(session: &mut Session, source: &BoolArgs) -> Result<Report> {
    let eps = session.require_epsilon()?;
    let input = BoolInput::load(source, session.strict_dimacs)?;
    let b = input.oracle();
    let est = boolean_mean(&mut session.engine, &b, eps, session.delta)?;
    let exact_count = input.exact_count()?;
    let exact_mean = exact_count as f64 / b.domain() as f64;
    if (est.value - exact_mean).abs() > eps {
        return Err(Error::VerifyMismatch(format!(
            "mean estimate {} is more than {eps} from the exact mean {exact_mean}",
            est.value
        )));
    }
    if let Some(count) = est.count {
        if count != exact_count {
            return Err(Error::VerifyMismatch(format!(
                "pinned count {count} disagrees with the exact count {exact_count}"
            )));
        }
    }
    let result = serde_json::json!({
        "match": true,
        "mean": est.value,
        "exact_mean": exact_mean,
        "count": est.count,
    });
    let params = format!(
        "epsilon={eps} delta={} backend={}",
        session.delta, session.backend
    );
    let digest = session.digest("verify-mean", &[input.digest_part()], &params);
    Ok(session.report("verify-mean", digest, result, eps, est.ledger))
}

fn run_verify_integrate(session: &mut Session, spec: &str, bound: Option<f64>) -> Result<Report> {
    let eps = session.require_epsilon()?;
    let expr = Expr::parse(spec)?;
    let f = expr.integrand(bound)?;
    let est = integrate_weighted(&mut session.engine, &f, eps, session.delta)?;
    let plain = expr.closure();
    let weighted = move |x: f64| plain(x) * (std::f64::consts::PI * x).sin().powi(2);
    let tol = (eps * 1e-2).clamp(1e-13, 1e-6);
    let quad = quadrature(&weighted, 0.0, 1.0, tol, &expr.breakpoints());
    if !quad.converged {
        return Err(Error::Numerical(
            "reference quadrature did not converge".into(),
        ));
    }
    let gap = (est.value - quad.value).abs();
    if gap > eps + quad.error_estimate {
        return Err(Error::VerifyMismatch(format!(
            "integral estimate {} is {gap} from the quadrature value {}, beyond epsilon {eps}",
            est.value, quad.value
        )));
    }
    let result = serde_json::json!({
        "match": true,
        "integral": est.value,
        "reference": quad.value,
    });
    let params = format!(
        "epsilon={eps} bound={} delta={} backend={}",
        f.bound_m, session.delta, session.backend
    );
    let digest = session.digest("verify-integrate", &[spec, expr.digest_part()], &params);
    Ok(session.report("verify-integrate", digest, result, eps, est.ledger))
}

fn assignment_bits(witness: u64, vars: u32) -> String {
    (0..vars)
        .map(|i| if (witness >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Boolean input resolved from the command line, kept alongside an
/// uncounted evaluator so `verify` can enumerate without touching the
/// query counters.
enum BoolInput {
    Cnf { formula: CnfFormula, text: String },
    Bits { table: Vec<bool>, text: String },
}

impl BoolInput {
    fn load(args: &BoolArgs, strict: bool) -> Result<BoolInput> {
        match (&args.cnf, &args.bits) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)?;
                let formula = parse_dimacs(&text, strict)?;
                Ok(BoolInput::Cnf { formula, text })
            }
            (None, Some(bits)) => {
                let table = bits
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::Parse(format!(
                            "truth table may only contain 0 and 1, found {other:?}"
                        ))),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                if table.is_empty() {
                    return Err(Error::InvalidInput("--bits is empty".into()));
                }
                Ok(BoolInput::Bits {
                    table,
                    text: bits.clone(),
                })
            }
            (None, None) => Err(Error::InvalidInput(
                "provide a Boolean function with --cnf or --bits".into(),
            )),
            (Some(_), Some(_)) => unreachable!("clap rejects --cnf together with --bits"),
        }
    }

    fn oracle(&self) -> BooleanOracle {
        match self {
            BoolInput::Cnf { formula, .. } => cnf_oracle(formula),
            BoolInput::Bits { table, .. } => BooleanOracle::from_bits(table),
        }
    }

    fn digest_part(&self) -> &str {
        match self {
            BoolInput::Cnf { text, .. } | BoolInput::Bits { text, .. } => text,
        }
    }

    fn plain_eval(&self, j: u64) -> bool {
        match self {
            BoolInput::Cnf { formula, .. } => formula.satisfied_by(j),
            BoolInput::Bits { table, .. } => (j as usize) < table.len() && table[j as usize],
        }
    }

    fn domain(&self) -> u64 {
        match self {
            BoolInput::Cnf { formula, .. } => 1u64 << formula.num_vars,
            BoolInput::Bits { table, .. } => (table.len() as u64).next_power_of_two().max(1),
        }
    }

    fn exact_count(&self) -> Result<u64> {
        let domain = self.domain();
        if domain > VERIFY_ENUMERATION_CAP {
            return Err(Error::Capacity(format!(
                "exhaustive verification capped at {VERIFY_ENUMERATION_CAP} inputs, got {domain}"
            )));
        }
        Ok((0..domain).filter(|&j| self.plain_eval(j)).count() as u64)
    }
}

fn load_vector(args: &VecArgs) -> Result<(BoundedVector, String)> {
    let text = match (&args.vector, &args.values) {
        (Some(path), None) => std::fs::read_to_string(path)?,
        (None, Some(values)) => values.replace(',', " "),
        (None, None) => {
            return Err(Error::InvalidInput(
                "provide entries with --vector or --values".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --vector together with --values"),
    };
    let entries = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad vector entry {tok:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if entries.is_empty() {
        return Err(Error::InvalidInput("the vector has no entries".into()));
    }
    let max_abs = entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = args.bound.unwrap_or_else(|| max_abs.max(1.0));
    let digest_part = format!("bound={bound} entries={text}");
    let x = BoundedVector::from_entries(entries, bound)?;
    Ok((x, digest_part))
}

/// A potential or integrand expression from the command line.
///
/// `const:<v>` is the constant v; `linear:<a>,<b>` is a + b x;
/// `sine:<amp>,<freq>` is 1/2 + amp sin(2 pi freq x); `file:<path>` is a
/// natural cubic interpolant through equally spaced samples on [0,1],
/// one per line. Derivative bounds are computed exactly from the form.
enum Expr {
    Const(f64),
    Linear { a: f64, b: f64 },
    Sine { amp: f64, freq: f64 },
    Table { spline: Spline, text: String },
}

impl Expr {
    fn parse(spec: &str) -> Result<Expr> {
        let (kind, rest) = spec.split_once(':').ok_or_else(|| {
            Error::Parse(format!(
                "expression {spec:?} must look like kind:args, e.g. const:0.5"
            ))
        })?;
        match kind {
            "const" => Ok(Expr::Const(parse_number(rest)?)),
            "linear" => {
                let [a, b] = parse_pair(rest)?;
                Ok(Expr::Linear { a, b })
            }
            "sine" => {
                let [amp, freq] = parse_pair(rest)?;
                Ok(Expr::Sine { amp, freq })
            }
            "file" => {
                let text = std::fs::read_to_string(rest)?;
                let samples = text
                    .split_whitespace()
                    .map(|tok| {
                        let v = tok
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad sample {tok:?} in {rest:?}")))?;
                        if !v.is_finite() {
                            return Err(Error::Parse(format!("sample {tok:?} is not finite")));
                        }
                        Ok(v)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if samples.len() < 2 {
                    return Err(Error::InvalidInput(
                        "a tabulated expression needs at least two samples".into(),
                    ));
                }
                Ok(Expr::Table {
                    spline: Spline::fit(samples),
                    text,
                })
            }
            other => Err(Error::Parse(format!(
                "unknown expression kind {other:?}; use const, linear, sine, or file"
            ))),
        }
    }

    fn digest_part(&self) -> &str {
        match self {
            Expr::Table { text, .. } => text,
            _ => "",
        }
    }

    fn closure(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        match self {
            Expr::Const(v) => {
                let v = *v;
                Arc::new(move |_| v)
            }
            Expr::Linear { a, b } => {
                let (a, b) = (*a, *b);
                Arc::new(move |x| a + b * x)
            }
            Expr::Sine { amp, freq } => {
                let (amp, w) = (*amp, 2.0 * std::f64::consts::PI * *freq);
                Arc::new(move |x| 0.5 + amp * (w * x).sin())
            }
            Expr::Table { spline, .. } => {
                let spline = spline.clone();
                Arc::new(move |x| spline.eval(x))
            }
        }
    }

    /// Exact sup bounds of the expression and its first two derivatives
    /// over [0,1].
    fn sups(&self) -> [f64; 3] {
        match self {
            Expr::Const(v) => [v.abs(), 0.0, 0.0],
            Expr::Linear { a, b } => [a.abs().max((a + b).abs()), b.abs(), 0.0],
            Expr::Sine { amp, freq } => {
                let w = (2.0 * std::f64::consts::PI * freq).abs();
                [0.5 + amp.abs(), amp.abs() * w, amp.abs() * w * w]
            }
            Expr::Table { spline, .. } => spline.sups(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Expr::Table { spline, .. } => spline.knots(),
            _ => Vec::new(),
        }
    }

    fn potential(&self) -> Potential {
        match self {
            Expr::Const(v) => Potential::constant(*v),
            _ => {
                let f = self.closure();
                Potential::from_fn(move |x| f(x), self.sups())
            }
        }
    }

    fn integrand(&self, bound: Option<f64>) -> Result<SmoothIntegrand> {
        let sups = self.sups();
        let implied = sups[0].max(sups[1]).max(sups[2]).max(f64::MIN_POSITIVE);
        let bound_m = match bound {
            Some(b) => {
                if !(b > 0.0) || !b.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "--bound must be positive and finite, got {b}"
                    )));
                }
                if b < implied * (1.0 - 1e-12) {
                    return Err(Error::InvalidInput(format!(
                        "--bound {b} is below {implied}, the bound the expression implies"
                    )));
                }
                b
            }
            None => implied,
        };
        let f = self.closure();
        Ok(SmoothIntegrand::from_fn(move |x| f(x), bound_m))
    }
}

fn parse_number(text: &str) -> Result<f64> {
    let v = text
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("number {text:?} is not finite")));
    }
    Ok(v)
}

fn parse_pair(text: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!(
            "expected two comma-separated numbers, got {text:?}"
        )));
    }
    Ok([parse_number(parts[0])?, parse_number(parts[1])?])
}

/// Natural cubic interpolant through samples at i/(n-1), i = 0..n-1.
/// Exposes exact sup bounds of the interpolant and its first two
/// derivatives, computed per piece from the cubic coefficients.
#[derive(Debug, Clone)]
struct Spline {
    ys: Vec<f64>,
    /// Second derivative at each knot; zero at the ends.
    second: Vec<f64>,
    h: f64,
}

impl Spline {
    fn fit(ys: Vec<f64>) -> Spline {
        let n = ys.len();
        let h = 1.0 / (n - 1) as f64;
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas solve of the natural-spline tridiagonal system:
            // h m[i-1] + 4h m[i] + h m[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h.
            let rows = n - 2;
            let mut diag = vec![4.0 * h; rows];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (ys[i + 1] - 2.0 * ys[i] + ys[i - 1]) / h)
                .collect();
            for i in 1..rows {
                let w = h / diag[i - 1];
                diag[i] -= w * h;
                rhs[i] -= w * rhs[i - 1];
            }
            second[rows] = rhs[rows - 1] / diag[rows - 1];
            for i in (1..rows).rev() {
                second[i] = (rhs[i - 1] - h * second[i + 1]) / diag[i - 1];
            }
        }
        Spline { ys, second, h }
    }

    fn knots(&self) -> Vec<f64> {
        (0..self.ys.len()).map(|i| i as f64 * self.h).collect()
    }

    fn piece(&self, x: f64) -> (usize, f64) {
        let n = self.ys.len();
        let x = x.clamp(0.0, 1.0);
        let i = ((x / self.h) as usize).min(n - 2);
        (i, x - i as f64 * self.h)
    }

    fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.piece(x);
        self.eval_piece(i, t)
    }

    fn eval_piece(&self, i: usize, t: f64) -> f64 {
        let h = self.h;
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let u = h - t;
        m0 * u.powi(3) / (6.0 * h)
            + m1 * t.powi(3) / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * u
            + (y1 / h - m1 * h / 6.0) * t
    }

    fn deriv_piece(&self, i: usize, t: f64) -> f64 {
        let h = self.h;
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let u = h - t;
        -m0 * u * u / (2.0 * h) + m1 * t * t / (2.0 * h) + (self.ys[i + 1] - self.ys[i]) / h
            - (m1 - m0) * h / 6.0
    }

    /// Exact sups of |S|, |S'|, |S''| over [0,1]. On each piece S'' is
    /// linear, S' is quadratic with an explicit critical point, and S is
    /// cubic whose extrema sit at the roots of S'.
    fn sups(&self) -> [f64; 3] {
        let h = self.h;
        let mut s0 = 0.0f64;
        let mut s1 = 0.0f64;
        let s2 = self.second.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..self.ys.len() - 1 {
            let (m0, m1) = (self.second[i], self.second[i + 1]);
            for t in [0.0, h] {
                s0 = s0.max(self.eval_piece(i, t).abs());
                s1 = s1.max(self.deriv_piece(i, t).abs());
            }
            // S'' vanishes at t = m0 h / (m0 - m1) when the slope changes
            // sign; S' has its extremum there.
            if (m0 - m1).abs() > 0.0 {
                let t = m0 * h / (m0 - m1);
                if (0.0..=h).contains(&t) {
                    s1 = s1.max(self.deriv_piece(i, t).abs());
                }
            }
            // Roots of the quadratic S'(t) = a t^2 + b t + c.
            let a = (m1 - m0) / (2.0 * h);
            let b = m0;
            let c = (self.ys[i + 1] - self.ys[i]) / h - (m1 - m0) * h / 6.0 - m0 * h / 2.0;
            for t in quadratic_roots(a, b, c) {
                if (0.0..=h).contains(&t) {
                    s0 = s0.max(self.eval_piece(i, t).abs());
                }
            }
        }
        [s0, s1, s2]
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-300 {
        if b.abs() < 1e-300 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    // The stable split: the larger-magnitude root first, the other by
    // Vieta, avoiding cancellation when b ~ sqrt(disc).
    let q = -0.5 * (b + b.signum() * s);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}
