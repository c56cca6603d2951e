use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use loopforge::config::{parse_algebra, RunConfig, Start};
use loopforge::fields::{ConnectionField, LoopField};
use loopforge::loops::LoopContext;
use loopforge::pseudoauto::PGroup;
use loopforge::report::Report;
use loopforge::suites::{self, Mode, VerifySettings};
use loopforge::{AlgebraValue, Error};

/// Loop calculus checks, field computations and torsion flows.
#[derive(Parser, Debug)]
#[command(name = "loopforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// C, H or O
    #[arg(long, global = true)]
    algebra: Option<String>,
    /// exact or float
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key = value config file with [sections]
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report path (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces every non-exact tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Config override, `section.key=value`; repeatable
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Identity suites; JSON report
    Verify,
    /// Per-point T, F̂, dT and structure residual; CSV
    Torsion,
    /// Energy flow; JSON report, optional per-iteration CSV
    Flow,
    /// Chern–Simons functional checks; JSON report
    Cs,
    /// Companion space of a map; JSON report
    Companions,
}

enum Failure {
    Usage(String),
    Identity(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Identity(other.to_string()),
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for s in &cli.set {
        let (k, v) = s.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects section.key=value, got '{s}'")))?;
        let (sec, key) = k.trim().split_once('.').unwrap_or(("run", k.trim()));
        cfg.set(sec, key, v.trim())?;
    }
    if let Some(a) = &cli.algebra {
        cfg.algebra = parse_algebra(a)?;
    }
    if let Some(m) = &cli.mode {
        cfg.mode = Some(Mode::parse(m)?);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(Failure::Usage("--tol must be positive".into()));
        }
        cfg.tol = Some(t);
    }
    Ok(cfg)
}

fn write(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_path(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_path(p: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn verdict(r: &Report) -> Result<(), Failure> {
    let bad: Vec<String> = r.failures().iter().map(|c| format!("{} [{}] residual {:e} > tol {:e}", c.name, c.tag, c.max_residual, c.tol)).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Identity(format!("failing identities:\n  {}", bad.join("\n  "))))
    }
}

fn float_only(cfg: &RunConfig, what: &str) -> Result<(), Failure> {
    if cfg.mode == Some(Mode::Exact) {
        return Err(Failure::Usage(format!("{what} runs in float mode only")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let tag = cfg.algebra;
    match cli.command {
        Command::Verify => {
            let mut set = VerifySettings::new(tag, cfg.mode_or(Mode::Exact), cfg.seed);
            set.samples = cfg.verify.samples;
            set.tangent_samples = cfg.verify.tangent_samples;
            set.phi_points = cfg.verify.phi_points;
            set.field_points = cfg.verify.field_points;
            set.fields = cfg.verify.fields;
            set.corrupt_table = cfg.verify.corrupted_table;
            let mut r = suites::verify(&set)?;
            if let Some(t) = cfg.tol {
                suites::override_tolerance(&mut r, t);
            }
            write(&cli.out, &json(&r))?;
            verdict(&r)
        }
        Command::Torsion => {
            float_only(&cfg, "torsion")?;
            let t = &cfg.torsion;
            let ctx = LoopContext::new(tag);
            let group = PGroup::for_tag(tag)?;
            let (mut s, mut a) = suites::seeded_fields(tag, t.dim, cfg.seed)?;
            if t.start == Start::Constant {
                s = LoopField::constant(tag, t.dim, AlgebraValue::one(tag));
            }
            if t.zero_connection {
                a = ConnectionField::zero(group, t.dim);
            }
            let pts = suites::torsion_points(t.dim, t.points)?;
            let rows = suites::torsion_dump(&ctx, &s, &a, &pts)?;
            write(&cli.out, &suites::torsion_csv(tag, &rows))?;
            let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
            let tol = cfg.tol.unwrap_or(1e-8);
            if worst.is_finite() && worst <= tol {
                Ok(())
            } else {
                Err(Failure::Identity(format!("structure-equation [Eq-dHT] residual {worst:e} > tol {tol:e}")))
            }
        }
        Command::Flow => {
            float_only(&cfg, "flow")?;
            let f = &cfg.flow;
            let (ctx, mut st) = suites::flow_state(tag, f.dim, f.grid, cfg.seed, f.start == Start::Constant)?;
            st.metric = f.metric;
            let (mut rep, out) = suites::flow_run(&ctx, st, &f.settings)?;
            if let Some(t) = cfg.tol {
                suites::override_tolerance(&mut rep.checks, t);
            }
            if let Some(p) = &f.history {
                write_path(p, &suites::flow_csv(&out))?;
            }
            write(&cli.out, &json(&rep))?;
            verdict(&rep.checks)
        }
        Command::Cs => {
            float_only(&cfg, "cs")?;
            let mut rep = suites::cs_run(tag, cfg.seed, cfg.cs_grid)?;
            if let Some(t) = cfg.tol {
                suites::override_tolerance(&mut rep.functional.checks, t);
            }
            write(&cli.out, &json(&rep))?;
            verdict(&rep.functional.checks)
        }
        Command::Companions => {
            let rep = suites::companions_run(tag, cfg.companion_map, cfg.mode_or(Mode::Exact), cfg.seed)?;
            write(&cli.out, &json(&rep))?;
            if let Some(n) = &rep.nucleus {
                eprintln!("{n}");
            }
            match rep.expected_in_span {
                Some(false) => Err(Failure::Identity("expected companion not in the companion space".into())),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("LOOPFORGE_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                // the global pool can only be set once; a second attempt is harmless
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("loopforge: LOOPFORGE_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Identity(m)) => {
            eprintln!("loopforge: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("loopforge: {m}");
            ExitCode::from(2)
        }
    }
}
