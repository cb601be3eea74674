// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Every artifact starts with a header naming the tool version, the full
//! configuration and the SHA-256 digest of every input file. JSON artifacts
//! are `{"header": .., "result": ..}`; text artifacts carry the header as
//! comment lines. Identical inputs and configuration give identical bytes.
//!
//! Exit status: 0 success, 1 usage error, 2 input or parse error, 3
//! internal invariant violation.

mod errors;

use crate::basis::{generate_wtpbs, Budgets};
use crate::coverage::{measure_coverage, measure_statement_coverage, MatchMode};
use crate::executor::{execute_test_case, project_trace, Execution, TestSuite};
use crate::frontend::{build_dapp_model, parse_source, pretty_print, AccountRole, DappModel, SourceUnit};
use crate::graph::{build_tcfg, export_dot, Arithmetic, GraphConfig, LowLevelRevert, Tcfg};
use crate::interactions::{
    count_requirements, enumerate_requirements, enumerate_tuples, generate_all_bases, Bases, InfeasibleAnnotations,
    RequirementSet,
};
use crate::mutation::{
    generate_mutants, random_suite, run_experiment, ExperimentSuite, MutantManifest, MutationOperator, Program,
    RandomTestConfig, SuiteKind,
};
use crate::Word;
use clap::{Args, Parser, Subcommand, ValueEnum};
use errors::CliError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Balance of account roles given without one.
pub const DEFAULT_BALANCE: u64 = 100;
/// Prefix of environment variables mirroring the global flags.
pub const ENV_PREFIX: &str = "TXBASIS_";

#[derive(Debug, Parser)]
#[command(name = "txbasis", version, about = "Whole-transaction basis path coverage for MiniSol programs")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GlobalOpts {
    /// Account roles as `name[:balance]`, comma separated.
    #[arg(long, global = true, env = "TXBASIS_ACCOUNTS", value_delimiter = ',', default_value = "alice,bob")]
    accounts: Vec<String>,
    /// Traversals allowed per call edge (B).
    #[arg(short = 'B', long = "call-budget", global = true, env = "TXBASIS_CALL_BUDGET", default_value_t = 2)]
    call_budget: u8,
    /// Traversals allowed per loop back edge (L).
    #[arg(short = 'L', long = "loop-budget", global = true, env = "TXBASIS_LOOP_BUDGET", default_value_t = 2)]
    loop_budget: u8,
    /// Search states expanded per basis path search.
    #[arg(long, global = true, env = "TXBASIS_MAX_STATES", default_value_t = 2_000_000)]
    max_states: usize,
    /// What a revert inside a low-level call does to the caller.
    #[arg(long, global = true, env = "TXBASIS_LOWLEVEL_REVERT", value_enum, default_value = "cascade")]
    lowlevel_revert: LowLevelArg,
    #[arg(long, global = true, env = "TXBASIS_ARITHMETIC", value_enum, default_value = "wrap")]
    arithmetic: ArithmeticArg,
    /// How traces are matched against basis paths.
    #[arg(long = "match", global = true, env = "TXBASIS_MATCH", value_enum, default_value = "exact")]
    match_mode: MatchArg,
    /// Seed of the random suite.
    #[arg(long, global = true, env = "TXBASIS_SEED", default_value_t = 42)]
    seed: u64,
    /// Write the artifact here instead of standard output.
    #[arg(short = 'o', long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LowLevelArg {
    Cascade,
    ReturnFalse,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ArithmeticArg {
    Wrap,
    Checked,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MatchArg {
    Exact,
    EdgeVector,
}

impl GlobalOpts {
    fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            lowlevel_revert: match self.lowlevel_revert {
                LowLevelArg::Cascade => LowLevelRevert::Cascade,
                LowLevelArg::ReturnFalse => LowLevelRevert::ReturnFalse,
            },
            arithmetic: match self.arithmetic {
                ArithmeticArg::Wrap => Arithmetic::Wrap,
                ArithmeticArg::Checked => Arithmetic::Checked,
            },
        }
    }

    fn budgets(&self) -> Budgets {
        Budgets {
            per_call_edge: self.call_budget,
            per_back_edge: self.loop_budget,
            max_states: self.max_states,
        }
    }

    fn match_mode(&self) -> MatchMode {
        match self.match_mode {
            MatchArg::Exact => MatchMode::Exact,
            MatchArg::EdgeVector => MatchMode::EdgeVector,
        }
    }

    fn account_roles(&self) -> Result<Vec<AccountRole>, CliError> {
        let default = Word::from(DEFAULT_BALANCE);
        self.accounts
            .iter()
            .map(|s| AccountRole::parse(s, &default).map_err(CliError::from))
            .collect()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a source file and print the dapp model.
    Parse { source: PathBuf },
    /// Build the transaction control flow graph.
    Tcfg {
        source: PathBuf,
        /// Also write the graph in DOT format here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Generate basis path sets for every transaction entry, or one.
    Basis {
        source: PathBuf,
        /// `Contract.function` or a unique function name.
        #[arg(long)]
        entry: Option<String>,
    },
    /// Enumerate k-bounded coverage requirements.
    Requirements {
        source: PathBuf,
        #[arg(short = 'k', long, default_value_t = 2)]
        k: usize,
    },
    /// Execute a test suite and print its transaction records.
    Run {
        source: PathBuf,
        #[arg(long)]
        tests: PathBuf,
    },
    /// Measure k-bounded coverage of a suite or of recorded runs.
    Coverage {
        source: PathBuf,
        #[command(flatten)]
        input: SuiteInput,
        #[arg(short = 'k', long, default_value_t = 2)]
        k: usize,
        /// Requirements judged infeasible, `{"infeasible": [{"id", "reason"}]}`.
        #[arg(long)]
        infeasible: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Measure statement coverage of a suite or of recorded runs.
    StmtCoverage {
        source: PathBuf,
        #[command(flatten)]
        input: SuiteInput,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Write every single-site mutant plus an index file to a directory.
    Mutate {
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Operators to apply; all generated operators by default.
        #[arg(long, value_delimiter = ',')]
        operators: Vec<String>,
    },
    /// Compare k-bounded, statement and random suites by mutants killed.
    Experiment {
        source: PathBuf,
        /// Mutant manifest; hand-written sources are read next to it.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        kbounded: PathBuf,
        #[arg(long)]
        statement: PathBuf,
        #[arg(short = 'k', long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SuiteInput {
    /// A test suite to execute.
    #[arg(long)]
    tests: Option<PathBuf>,
    /// Executions recorded by `run`.
    #[arg(long)]
    runs: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    config: &'a GlobalOpts,
    inputs: Vec<InputDigest>,
}

impl Header<'_> {
    fn comment_lines(&self, prefix: &str) -> String {
        let json = serde_json::to_string(self).expect("header serialises");
        format!("{prefix} {} {} {}\n{prefix} {json}\n", self.tool, self.version, self.command)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    header: &'a Header<'a>,
    result: T,
}

/// Runs the tool on `argv` (program name first) and returns the exit
/// status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    fn new() -> Self {
        Inputs { digests: Vec::new() }
    }

    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::input(format!("cannot read `{}`: {e}", path.display())))?;
        self.digests.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|_| CliError::input(format!("`{}` is not UTF-8", path.display())))
    }

    /// Reads `path` as `T`, or as an artifact whose `result` is a `T`.
    fn json<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T, CliError> {
        let text = self.read(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("`{}`: {e}", path.display())))?;
        let value = match value {
            serde_json::Value::Object(mut m) if m.contains_key("header") && m.contains_key("result") => {
                m.remove("result").expect("checked above")
            }
            v => v,
        };
        serde_json::from_value(value).map_err(|e| CliError::input(format!("`{}`: {e}", path.display())))
    }
}

fn write_artifact(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::input(format!("cannot write output: {e}")))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("cannot write `{}`: {e}", path.display())))
}

fn json_artifact<T: Serialize>(header: &Header, result: T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope { header, result }).expect("artifact serialises");
    s.push('\n');
    s
}

fn load_program(inputs: &mut Inputs, opts: &GlobalOpts, source: &Path) -> Result<(SourceUnit, DappModel, Tcfg), CliError> {
    let text = inputs.read(source)?;
    let unit = parse_source(&text)?;
    let model = build_dapp_model(&unit, &opts.account_roles()?)?;
    let g = build_tcfg(&model, &opts.graph_config())?;
    Ok((unit, model, g))
}

fn requirement_set(model: &DappModel, g: &Tcfg, opts: &GlobalOpts, k: usize) -> Result<(Bases, RequirementSet), CliError> {
    let bases = generate_all_bases(g, opts.budgets())?;
    let tuples = enumerate_tuples(model, &bases)?;
    let set = enumerate_requirements(&tuples, &bases, k)?;
    Ok((bases, set))
}

fn executions(inputs: &mut Inputs, model: &DappModel, g: &Tcfg, input: &SuiteInput) -> Result<Vec<Execution>, CliError> {
    match (&input.tests, &input.runs) {
        (Some(tests), _) => {
            let suite: TestSuite = inputs.json(tests)?;
            run_suite(model, g, &suite)
        }
        (None, Some(runs)) => inputs.json(runs),
        (None, None) => Err(CliError::usage("one of --tests or --runs is required")),
    }
}

/// Executes `suite` and checks every trace against the graph.
fn run_suite(model: &DappModel, g: &Tcfg, suite: &TestSuite) -> Result<Vec<Execution>, CliError> {
    let mut out = Vec::new();
    for t in &suite.tests {
        let ex = execute_test_case(model, g, t).map_err(|e| CliError::exec(&t.name, e))?;
        for r in &ex.records {
            project_trace(g, r).map_err(|e| CliError::exec(&t.name, e))?;
        }
        out.push(ex);
    }
    Ok(out)
}

fn header<'a>(command: &'static str, opts: &'a GlobalOpts, k: Option<usize>, inputs: Inputs) -> Header<'a> {
    Header {
        tool: "txbasis",
        version: env!("CARGO_PKG_VERSION"),
        command,
        k,
        config: opts,
        inputs: inputs.digests,
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let opts = &cli.opts;
    let out = opts.output.as_deref();
    let mut inputs = Inputs::new();
    match &cli.command {
        Command::Parse { source } => {
            let (unit, model, _) = load_program(&mut inputs, opts, source)?;
            #[derive(Serialize)]
            struct Parsed<'a> {
                model: &'a DappModel,
                unit: &'a SourceUnit,
                normalised_source: String,
            }
            let h = header("parse", opts, None, inputs);
            let result = Parsed {
                model: &model,
                unit: &unit,
                normalised_source: pretty_print(&unit),
            };
            write_artifact(out, &json_artifact(&h, result))
        }
        Command::Tcfg { source, dot } => {
            let (_, _, g) = load_program(&mut inputs, opts, source)?;
            g.check_invariants().map_err(|e| CliError::internal(e.to_string()))?;
            let h = header("tcfg", opts, None, inputs);
            if let Some(p) = dot {
                write_file(p, &format!("{}{}", h.comment_lines("//"), export_dot(&g)))?;
            }
            write_artifact(out, &json_artifact(&h, &g))
        }
        Command::Basis { source, entry } => {
            let (_, _, g) = load_program(&mut inputs, opts, source)?;
            let entries = match entry {
                Some(name) => {
                    let f = g.resolve_function(name)?;
                    if !g.is_transaction_entry(f.entry) {
                        return Err(CliError::input(format!("`{name}` is not a transaction entry")));
                    }
                    vec![f.entry]
                }
                None => g.transaction_entries(),
            };
            let mut sets = Vec::new();
            for e in entries {
                sets.push(generate_wtpbs(&g, e, opts.budgets())?);
            }
            let h = header("basis", opts, None, inputs);
            write_artifact(out, &json_artifact(&h, sets))
        }
        Command::Requirements { source, k } => {
            let (_, model, g) = load_program(&mut inputs, opts, source)?;
            let (bases, set) = requirement_set(&model, &g, opts, *k)?;
            let closed_form = count_requirements(&set.tuples, &bases, *k)?;
            if closed_form != set.total().into() {
                return Err(CliError::internal(format!(
                    "enumerated {} requirements, closed form gives {closed_form}",
                    set.total()
                )));
            }
            let h = header("requirements", opts, Some(*k), inputs);
            write_artifact(out, &json_artifact(&h, &set))
        }
        Command::Run { source, tests } => {
            let (_, model, g) = load_program(&mut inputs, opts, source)?;
            let suite: TestSuite = inputs.json(tests)?;
            let runs = run_suite(&model, &g, &suite)?;
            let h = header("run", opts, None, inputs);
            write_artifact(out, &json_artifact(&h, &runs))
        }
        Command::Coverage {
            source,
            input,
            k,
            infeasible,
            format,
        } => {
            let (_, model, g) = load_program(&mut inputs, opts, source)?;
            let runs = executions(&mut inputs, &model, &g, input)?;
            let annotations: InfeasibleAnnotations = match infeasible {
                Some(p) => inputs.json(p)?,
                None => InfeasibleAnnotations::default(),
            };
            let (bases, set) = requirement_set(&model, &g, opts, *k)?;
            let report = measure_coverage(&g, &set, &bases, &runs, &annotations, opts.match_mode())?;
            let h = header("coverage", opts, Some(*k), inputs);
            let text = match format {
                Format::Json => json_artifact(&h, &report),
                Format::Table => format!("{}{}", h.comment_lines("#"), report.table(&set)),
            };
            write_artifact(out, &text)
        }
        Command::StmtCoverage { source, input, format } => {
            let (_, model, g) = load_program(&mut inputs, opts, source)?;
            let runs = executions(&mut inputs, &model, &g, input)?;
            let stmt = measure_statement_coverage(&g, &runs);
            let h = header("stmt-coverage", opts, None, inputs);
            let text = match format {
                Format::Json => json_artifact(&h, &stmt),
                Format::Table => {
                    let mut t = format!(
                        "{}statement coverage {}/{} ({:.1}%)\n",
                        h.comment_lines("#"),
                        stmt.visited,
                        stmt.total,
                        stmt.percent()
                    );
                    for n in &stmt.unvisited {
                        t.push_str(&format!("  unvisited {}\n", g.describe(*n)));
                    }
                    t
                }
            };
            write_artifact(out, &text)
        }
        Command::Mutate {
            source,
            out: dir,
            operators,
        } => {
            let (unit, _, _) = load_program(&mut inputs, opts, source)?;
            let ops = parse_operators(operators)?;
            let mutants = generate_mutants(&unit, &ops);
            let h = header("mutate", opts, None, inputs);
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::input(format!("cannot create `{}`: {e}", dir.display())))?;
            let descriptors: Vec<_> = mutants.iter().map(|m| &m.descriptor).collect();
            write_file(&dir.join("index.json"), &json_artifact(&h, &descriptors))?;
            for m in &mutants {
                let text = format!("{}{}", h.comment_lines("//"), m.source);
                write_file(&dir.join(format!("{}.msol", m.descriptor.id)), &text)?;
            }
            let summary = format!("{}{} mutants written to {}\n", h.comment_lines("#"), mutants.len(), dir.display());
            write_artifact(out, &summary)
        }
        Command::Experiment {
            source,
            manifest,
            kbounded,
            statement,
            k,
            format,
        } => {
            let (unit, model, g) = load_program(&mut inputs, opts, source)?;
            let manifest_doc: MutantManifest = inputs.json(manifest)?;
            let kb: TestSuite = inputs.json(kbounded)?;
            let st: TestSuite = inputs.json(statement)?;
            let (bases, set) = requirement_set(&model, &g, opts, *k)?;
            let generated = generate_mutants(&unit, &MutationOperator::GENERATED);
            let dir = manifest.parent().unwrap_or(Path::new("."));
            let mutants = manifest_doc.resolve(&generated, dir)?;
            let program = Program {
                model,
                graph: g,
                config: opts.graph_config(),
            };
            let shape: Vec<usize> = kb.tests.iter().map(|t| t.steps.len()).collect();
            let rs = random_suite(&program.model, &RandomTestConfig::for_model(&program.model), opts.seed, &shape);
            let suites = vec![
                ExperimentSuite::record(SuiteKind::KBounded, &program, kb)?,
                ExperimentSuite::record(SuiteKind::Statement, &program, st)?,
                ExperimentSuite::record(SuiteKind::Random, &program, rs)?,
            ];
            let report = run_experiment(&program, &set, &bases, opts.match_mode(), &suites, &mutants, Some(opts.seed))?;
            let h = header("experiment", opts, Some(*k), inputs);
            let text = match format {
                Format::Json => json_artifact(&h, &report),
                Format::Table => format!("{}{}", h.comment_lines("#"), report.table()),
            };
            write_artifact(out, &text)
        }
    }
}

fn parse_operators(names: &[String]) -> Result<Vec<MutationOperator>, CliError> {
    if names.is_empty() {
        return Ok(MutationOperator::GENERATED.to_vec());
    }
    names
        .iter()
        .map(|n| {
            MutationOperator::parse(n)
                .filter(|o| MutationOperator::GENERATED.contains(o))
                .ok_or_else(|| CliError::usage(format!("unknown mutation operator `{n}`")))
        })
        .collect()
}
