use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use regmod::catalog::{catalog_list, reports_to_json, run_entry, verify_all, RunReport};
use regmod::metric::DEFAULT_SEED;
use regmod::{Error, RadiusLadder, Scheme, Settings64};
use serde_json::Value;

/// Estimate regularity moduli and exact penalty thresholds on the built-in
/// catalog.
#[derive(Parser)]
#[command(name = "regmod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog entries and their operations.
    List {
        /// Print the full entries as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one operation on one entry.
    Run {
        entry: String,
        operation: String,
        /// Formula or operation parameter, repeatable.
        #[arg(long = "param", value_name = "K=V", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the report as JSON.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
        /// Write the per-rung values of an estimate as CSV.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Grade every expected result of the catalog.
    VerifyAll {
        /// Run entries concurrently.
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Lattice,
    Scrambled,
}

#[derive(Args)]
struct ConfigArgs {
    /// Grid points per axis.
    #[arg(long, value_name = "N")]
    grid_density: Option<usize>,
    /// Radius ladder as r0,factor,rungs.
    #[arg(long, value_name = "R0,FACTOR,RUNGS", value_parser = parse_ladder)]
    ladder: Option<RadiusLadder<f64>>,
    /// Convergence tolerance of the ladder verdicts.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Sampling scheme; the scrambled scheme is seeded from REGMOD_SEED.
    #[arg(long, value_enum, default_value = "lattice")]
    scheme: SchemeArg,
}

impl ConfigArgs {
    fn settings(&self) -> Result<Settings64> {
        let mut s = Settings64::default();
        if let Some(n) = self.grid_density {
            if n < 2 {
                bail!("grid density must be at least 2");
            }
            s = s.with_density(n);
        }
        if let Some(l) = self.ladder {
            s = s.with_ladder(l);
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                bail!("tolerance must be positive");
            }
            s.tol.conv = t;
        }
        s.resolution.scheme = match self.scheme {
            SchemeArg::Lattice => Scheme::UniformLattice,
            SchemeArg::Scrambled => Scheme::ScrambledLowDiscrepancy { seed: seed()? },
        };
        Ok(s)
    }
}

fn seed() -> Result<u64> {
    match std::env::var("REGMOD_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("REGMOD_SEED={v:?} is not an integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("{v:?} is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_ladder(s: &str) -> Result<RadiusLadder<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [r0, factor, rungs] = parts[..] else {
        return Err(format!("expected r0,factor,rungs, got {s:?}"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|_| format!("{x:?} is not a number"));
    let rungs = rungs.parse::<usize>().map_err(|_| format!("{rungs:?} is not a count"))?;
    RadiusLadder::new(num(r0)?, num(factor)?, rungs).map_err(|e| e.to_string())
}

/// Writes through a temporary file in the target directory so readers never
/// see a partial report.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn rungs_csv(report: &RunReport) -> Result<String> {
    let rungs = report
        .result
        .get("rungs")
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("operation {} does not produce per-rung values", report.operation))?;
    let cell = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let mut out = String::from("radius,value,raw\n");
    for r in rungs {
        out.push_str(&format!("{},{},{}\n", cell(&r["radius"]), cell(&r["value"]), cell(&r["raw"])));
    }
    Ok(out)
}

/// Prints to stdout; a closed pipe ends the process quietly.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn list(json: bool) -> Result<Outcome> {
    let entries = catalog_list();
    if json {
        emit(&format!("{}\n", serde_json::to_string_pretty(&entries)?));
        return Ok(Outcome::Pass);
    }
    for e in &entries {
        let params: Vec<String> = e.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        emit(&format!(
            "{:<24} {:<10} {}{}\n{:<24} operations: {}\n",
            e.name,
            format!("{:?}", e.kind).to_lowercase(),
            e.description,
            if params.is_empty() { String::new() } else { format!(" ({})", params.join(", ")) },
            "",
            e.kind.operations().join(", ")
        ));
    }
    Ok(Outcome::Pass)
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::List { json } => list(json),
        Command::Run { entry, operation, params, config, json, csv } => {
            let s = config.settings().map_err(Usage)?;
            let overrides: BTreeMap<String, f64> = params.into_iter().collect();
            let report = run_entry(&entry, &operation, &overrides, &s).map_err(usage_or_fail)?;
            emit(&report.summary());
            eprintln!("wall time {:.3} s", report.wall_time.as_secs_f64());
            if let Some(path) = json {
                write_atomic(&path, &serde_json::to_string_pretty(&report)?)?;
            }
            if let Some(path) = csv {
                write_atomic(&path, &rungs_csv(&report)?)?;
            }
            Ok(if report.passed { Outcome::Pass } else { Outcome::Fail })
        }
        Command::VerifyAll { parallel, config, json } => {
            let s = config.settings().map_err(Usage)?;
            let reports = verify_all(&s, parallel)?;
            for r in &reports {
                emit(&r.summary());
            }
            let failed = reports.iter().filter(|r| !r.passed).count();
            emit(&format!("{} runs, {} failed\n", reports.len(), failed));
            if let Some(path) = json {
                write_atomic(&path, &reports_to_json(&reports))?;
            }
            Ok(if failed == 0 { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for Usage {}

fn usage_or_fail(e: Error) -> anyhow::Error {
    match e {
        Error::UnknownEntry(_) | Error::UnknownOperation { .. } | Error::InvalidParameter(_) => {
            Usage(e.into()).into()
        }
        other => other.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
