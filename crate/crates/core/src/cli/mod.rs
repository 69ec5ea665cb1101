//! Batch front end for the `anderson` binary.
//!
//! Every command writes into a fresh timestamped directory under `--out`
//! together with a `manifest.json` (schema `v1`) that records the command,
//! its parameters, the seed and the frozen kernel constants. Existing
//! directories are never reused.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on
//! configuration or budget errors.

pub mod checks;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bphz::zimmermann;
use crate::bubbles::{sigma_eff_coefficients, write_sigma_csv, Budget};
use crate::degrees::{classify, min_degree};
use crate::diagrams::{build, enumerate_pairings, named, rational_to_string, trees_from_sizes, FeynmanDiagram, PairingMode};
use crate::error::{Error, Result};
use crate::greens::{calibrate, FrozenConstants, GreensEvaluator, KernelMode};
use crate::valuation::{
    evaluate_diagram, evaluate_formal_sum, parse_dyadic, weak_coupling_scan, write_increments_csv, write_scan_csv,
    MCConfig, ScanTarget, TestFunction,
};
use checks::{Check, NumericOptions};

pub const MANIFEST_SCHEMA: &str = "v1";

#[derive(Debug, Parser)]
#[command(name = "anderson", version, about = "Diagram enumeration, renormalisation and numerics for the 4D Anderson model")]
pub struct Cli {
    /// Directory receiving one timestamped subdirectory per run.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "lower")]
pub enum Suite {
    Identities,
    Sectors,
    Renorm,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "lower")]
pub enum Mode {
    Internal,
    Complete,
    Connected,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct McArgs {
    /// Monte Carlo sample count, e.g. `100000`, `10^6` or `1e6`.
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub samples: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Kernel: `exact` (periodic) or `local` (leading singular part).
    #[arg(long, value_parser = parse_mode, default_value = "exact")]
    pub kernel_mode: KernelMode,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Run a verification suite and report every check.
    Verify {
        #[arg(value_enum, ignore_case = true)]
        suite: Suite,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long, value_parser = parse_eps, default_value = "2^-10")]
        eps: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Effective variance coefficients `C_n` as CSV.
    SigmaTable {
        #[arg(long, default_value_t = 5)]
        nmax: usize,
    },
    /// Classify every complete pairing of the given ladder trees.
    Classify {
        #[arg(long, value_parser = parse_sizes)]
        trees: Sizes,
    },
    /// Write the diagrams of every pairing of the given trees as JSON.
    Enumerate {
        #[arg(long, value_parser = parse_sizes)]
        trees: Sizes,
        #[arg(long, value_enum, default_value = "complete")]
        mode: Mode,
    },
    /// Forest-formula output for a diagram.
    Renormalise {
        /// Built-in diagram name.
        #[arg(long, conflicts_with = "file")]
        diagram: Option<String>,
        /// Diagram JSON file.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Monte Carlo valuation of a diagram or its renormalisation.
    Evaluate {
        #[arg(long)]
        diagram: String,
        #[arg(long, value_parser = parse_eps)]
        eps: f64,
        #[arg(long)]
        renormalised: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Weak-coupling scan over a dyadic range of epsilon.
    Scan {
        #[arg(long)]
        diagram: String,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// `2^-a..2^-b` or a comma-separated list of `2^-k`.
        #[arg(long, value_parser = parse_eps_list)]
        eps: EpsList,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Re-derive the kernel bound constants.
    Calibrate {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, value_parser = parse_count, default_value = "4000")]
        samples: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsList(pub Vec<f64>);

/// Comma-separated ladder tree sizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sizes(pub Vec<usize>);

pub fn parse_eps(s: &str) -> std::result::Result<f64, String> {
    let eps = parse_dyadic(s).map_err(|e| e.to_string())?;
    if eps > 0.25 {
        return Err(format!("'{s}' exceeds 2^-2"));
    }
    Ok(eps)
}

pub fn parse_eps_list(s: &str) -> std::result::Result<EpsList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_eps(a)?, parse_eps(b)?);
        let (ka, kb) = ((1.0 / a).log2().round() as i32, (1.0 / b).log2().round() as i32);
        let (lo, hi) = (ka.min(kb), ka.max(kb));
        return Ok(EpsList((lo..=hi).map(|k| 2f64.powi(-k)).collect()));
    }
    s.split(',').map(parse_eps).collect::<std::result::Result<_, _>>().map(EpsList)
}

pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let bad = || format!("'{s}' is not a count");
    let v = if let Some((b, e)) = s.split_once('^') {
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        let e: u32 = e.trim().parse().map_err(|_| bad())?;
        b.checked_pow(e).map(|v| v as usize).ok_or_else(bad)?
    } else if let Ok(v) = s.parse::<usize>() {
        v
    } else {
        let f: f64 = s.parse().map_err(|_| bad())?;
        if !(f >= 1.0 && f.fract() == 0.0 && f < 1e12) {
            return Err(bad());
        }
        f as usize
    };
    if v == 0 {
        return Err(bad());
    }
    Ok(v)
}

pub fn parse_sizes(s: &str) -> std::result::Result<Sizes, String> {
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| format!("'{t}' is not a tree size"))).collect::<std::result::Result<_, _>>().map(Sizes)
}

pub fn parse_mode(s: &str) -> std::result::Result<KernelMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Manifest written next to the outputs of every run.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub frozen_constants: Value,
    pub outputs: Vec<String>,
    pub package_version: String,
    pub created: String,
    pub exit_code: i32,
}

/// A run directory that only ever gains new files.
pub struct RunDir {
    path: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> Result<Self> {
        fs::create_dir_all(root)?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
        for k in 0.. {
            let name = if k == 0 { format!("{command}-{stamp}") } else { format!("{command}-{stamp}-{k}") };
            let path = root.join(name);
            match fs::create_dir(&path) {
                Ok(()) => return Ok(RunDir { path, outputs: Vec::new() }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
        unreachable!()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Opens a new output file; refuses to overwrite.
    pub fn file(&mut self, name: &str) -> Result<fs::File> {
        let f = fs::OpenOptions::new().write(true).create_new(true).open(self.path.join(name))?;
        self.outputs.push(name.to_string());
        Ok(f)
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut f = self.file(name)?;
        serde_json::to_writer_pretty(&mut f, v)?;
        writeln!(f)?;
        Ok(())
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Verify { .. } => "verify",
        Command::SigmaTable { .. } => "sigma-table",
        Command::Classify { .. } => "classify",
        Command::Enumerate { .. } => "enumerate",
        Command::Renormalise { .. } => "renormalise",
        Command::Evaluate { .. } => "evaluate",
        Command::Scan { .. } => "scan",
        Command::Calibrate { .. } => "calibrate",
    }
}

fn seed_of(c: &Command) -> Option<u64> {
    match c {
        Command::Verify { mc, .. } | Command::Evaluate { mc, .. } | Command::Scan { mc, .. } => Some(mc.seed),
        Command::Calibrate { seed, .. } => Some(*seed),
        _ => None,
    }
}

fn mc_config(mc: &McArgs) -> MCConfig {
    MCConfig { samples: mc.samples, seed: mc.seed, kernel_mode: mc.kernel_mode, ..MCConfig::default() }
}

fn load_diagram(name: Option<&str>, file: Option<&Path>) -> Result<FeynmanDiagram> {
    match (name, file) {
        (Some(n), None) => named(n),
        (None, Some(p)) => FeynmanDiagram::from_json_str(&fs::read_to_string(p)?),
        _ => Err(Error::InvalidInput("give exactly one of --diagram or --file".into())),
    }
}

/// Outcome of a command body: check results when the command verifies something.
struct Outcome {
    checks: Vec<Check>,
}

fn execute(cmd: &Command, dir: &mut RunDir) -> Result<Outcome> {
    let mut checks = Vec::new();
    match cmd {
        Command::Verify { suite, nmax, eps, mc } => {
            checks = match suite {
                Suite::Identities => checks::identities(nmax.unwrap_or(5))?,
                Suite::Renorm => checks::renorm(nmax.unwrap_or(6))?,
                Suite::Sectors => checks::sectors(mc.seed)?,
                Suite::Numeric => checks::numeric(&NumericOptions {
                    eps: *eps,
                    samples: mc.samples,
                    seed: mc.seed,
                    kernel_mode: mc.kernel_mode,
                })?,
            };
            let mut txt = dir.file("report.txt")?;
            for c in &checks {
                println!("{}", c.line());
                writeln!(txt, "{}", c.line())?;
            }
            dir.write_json("report.json", &serde_json::to_value(&checks)?)?;
        }
        Command::SigmaTable { nmax } => {
            let budget = if *nmax > 5 { Budget::Extended } else { Budget::Default };
            let table = sigma_eff_coefficients(*nmax, budget)?;
            write_sigma_csv(&table, dir.file("sigma_table.csv")?)?;
            for c in &table.coefficients {
                println!("n = {}: C_n = {} ({})", c.n, crate::bphz::big_to_string(&c.c_n), c.weight);
            }
        }
        Command::Classify { trees } => {
            let ladder = trees_from_sizes(&trees.0);
            let mut rows = Vec::new();
            for (i, k) in enumerate_pairings(&ladder, PairingMode::Complete)?.iter().enumerate() {
                let d = build(&ladder, k)?;
                let class = classify(&d);
                println!("{i}: {class:?}");
                rows.push(json!({
                    "index": i,
                    "pairs": k.pairs().iter().map(|(a, b)| [[a.tree, a.pos], [b.tree, b.pos]]).collect::<Vec<_>>(),
                    "class": class,
                    "min_degree": min_degree(&d).map(|m| rational_to_string(&m)),
                    "diagram": d.to_json(),
                }));
            }
            dir.write_json("classify.json", &json!({ "trees": trees.0, "diagrams": rows }))?;
        }
        Command::Enumerate { trees, mode } => {
            let ladder = trees_from_sizes(&trees.0);
            let pm = match mode {
                Mode::Internal => PairingMode::Internal,
                Mode::Complete => PairingMode::Complete,
                Mode::Connected => PairingMode::ConnectedComplete,
            };
            let diagrams: Vec<Value> = enumerate_pairings(&ladder, pm)?
                .iter()
                .map(|k| build(&ladder, k).map(|d| d.to_json()))
                .collect::<Result<_>>()?;
            println!("{} diagrams", diagrams.len());
            dir.write_json("diagrams.json", &Value::Array(diagrams))?;
        }
        Command::Renormalise { diagram, file } => {
            let d = load_diagram(diagram.as_deref(), file.as_deref())?;
            let fs = zimmermann(&d);
            println!("{fs}");
            dir.write_json("formal_sum.json", &json!({ "diagram": d.to_json(), "renormalised": fs.to_json(), "reduced": fs.reduce().to_json() }))?;
        }
        Command::Evaluate { diagram, eps, renormalised, mc } => {
            let d = named(diagram)?;
            let cfg = mc_config(mc);
            let r = if *renormalised {
                evaluate_formal_sum(&zimmermann(&d), *eps, &TestFunction::ConstantOne, &cfg)?
            } else {
                evaluate_diagram(&d, *eps, &TestFunction::ConstantOne, &cfg)?
            };
            println!("{} +- {}", r.estimate, r.stderr);
            dir.write_json("valuation.json", &serde_json::to_value(&r)?)?;
        }
        Command::Scan { diagram, lambda, eps, mc } => {
            let d = named(diagram)?;
            let table = weak_coupling_scan(&ScanTarget::Diagram(d), &TestFunction::ConstantOne, *lambda, &eps.0, &mc_config(mc))?;
            write_scan_csv(&table, dir.file("scan.csv")?)?;
            write_increments_csv(&table, dir.file("increments.csv")?)?;
            for inc in &table.increments {
                println!(
                    "{} -> {}: {:.4} +- {:.4} (leading order {:.4})",
                    inc.epsilon, inc.next_epsilon, inc.difference, inc.stderr, inc.predicted
                );
            }
        }
        Command::Calibrate { seed, samples } => {
            let c = calibrate(&GreensEvaluator::exact(), *seed, *samples)?;
            dir.write_json("greens_constants.json", &serde_json::to_value(&c)?)?;
            println!("{}", serde_json::to_string_pretty(&c)?);
        }
    }
    Ok(Outcome { checks })
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded(_) | Error::InvalidInput(_) | Error::PreconditionViolated(_) | Error::OutOfRadius(_) => 2,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        _ => 1,
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: &Cli, argv: Vec<String>) -> i32 {
    let name = command_name(&cli.command);
    let mut dir = match RunDir::create(&cli.out, name) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let (code, error) = match execute(&cli.command, &mut dir) {
        Ok(o) if o.checks.iter().all(|c| c.pass) => (0, None),
        Ok(_) => (1, None),
        Err(e) => (exit_code_for(&e), Some(e.to_string())),
    };
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    let frozen = FrozenConstants::frozen();
    let mut outputs = dir.outputs.clone();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        command: name.into(),
        argv,
        parameters: serde_json::to_value(&cli.command).unwrap_or(Value::Null),
        seed: seed_of(&cli.command),
        frozen_constants: json!({ "version": frozen.version, "generator": frozen.generator }),
        outputs: outputs.iter().map(|o| dir.path().join(o).display().to_string()).collect(),
        package_version: env!("CARGO_PKG_VERSION").into(),
        created: chrono::Utc::now().to_rfc3339(),
        exit_code: code,
    };
    let mut value = serde_json::to_value(&manifest).unwrap_or(Value::Null);
    if let (Some(e), Value::Object(m)) = (error, &mut value) {
        m.insert("error".into(), Value::String(e));
    }
    if let Err(e) = dir.write_json("manifest.json", &value) {
        eprintln!("error: could not write manifest: {e}");
        return 2;
    }
    println!("wrote {}", dir.path().display());
    code
}

/// Parses `argv` and runs; clap usage errors exit with code 2.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    match Cli::try_parse_from(&argv) {
        Ok(cli) => run(&cli, argv),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
