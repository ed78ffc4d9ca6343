//! Command-line front end: `check`, `solve`, `simulate`, `ictest`, `export`.
//!
//! Exit codes: 0 pass, 1 assumption or condition failure, 2 statistical
//! failure, 3 I/O or parse failure.

pub mod config;
pub mod export;
pub mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::hjbsolve::{build_all, check_shape, ValueFunctions};
use crate::mcsim::{self, SimConfig, SimResult};
use crate::params::{check_assumptions, derive, AssumptionReport};
use crate::policy::ContractPolicy;
use config::{RunConfig, U0};
use manifest::RunManifest;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CONDITION: u8 = 1;
pub const EXIT_STATISTICAL: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// Acceptance band for the Monte Carlo checks, in standard errors.
pub const SE_BAND: f64 = 3.0;

pub const EVENTS_FILE: &str = "events.csv";
pub const SIMULATE_FILE: &str = "simulate.txt";
pub const ICTEST_FILE: &str = "ictest.txt";

#[derive(Debug, Parser)]
#[command(
    name = "pool-contract",
    version,
    about = "Optimal monitoring contract for a pool of loans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (key=value text).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Take the configuration from a manifest written by an earlier run.
    #[arg(long, global = true, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override n_paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Override seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override u0.
    #[arg(long, global = true)]
    pub u0: Option<f64>,
    /// Write the per-path event log (simulate only).
    #[arg(long, global = true)]
    pub events: bool,
    /// Worker threads for the simulation; does not change results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Report the standing assumptions and their margins.
    Check,
    /// Build the value functions and write them with a manifest.
    Solve,
    /// Monte Carlo check of the bank's and the investors' values.
    Simulate,
    /// Monte Carlo check that shirking does not pay.
    #[command(alias = "ic-test")]
    Ictest,
    /// Write plot-ready CSV tables.
    Export,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Ictest => "ictest",
            Command::Export => "export",
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Config(_) | Error::Io(_) => EXIT_IO,
        _ => EXIT_CONDITION,
    }
}

/// Runs one invocation, writing the human-readable report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> u8 {
    let mut buf: Vec<u8> = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli, &mut buf)),
            Err(e) => Err(Error::Config(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(cli, &mut buf),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(buf, "error: {e}");
            exit_code(&e)
        }
    };
    match out.write_all(&buf).and_then(|_| out.flush()) {
        Ok(()) => code,
        Err(_) => EXIT_IO,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match (&cli.config, &cli.manifest) {
        (Some(p), None) => RunConfig::parse_file(p)?,
        (None, Some(p)) => manifest::config_from_manifest(&std::fs::read_to_string(p)?)?,
        _ => {
            return Err(Error::Config(
                "exactly one of --config or --manifest is required".into(),
            ))
        }
    };
    if let Some(n) = cli.paths {
        cfg.n_paths = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(u) = cli.u0 {
        cfg.u0 = U0::Value(u);
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Check => cmd_check(&cfg, out),
        Command::Solve | Command::Export => cmd_solve(cli, &cfg, out),
        Command::Simulate => cmd_simulate(cli, &cfg, out),
        Command::Ictest => cmd_ictest(cli, &cfg, out),
    }
}

fn print_report(report: &AssumptionReport, out: &mut dyn Write) -> Result<()> {
    for c in &report.conditions {
        writeln!(
            out,
            "{} {}  margin={:e}",
            if c.holds { "PASS" } else { "FAIL" },
            c.name,
            c.margin
        )?;
    }
    writeln!(
        out,
        "overall={}",
        if report.overall { "pass" } else { "fail" }
    )?;
    Ok(())
}

pub fn cmd_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    let derived = derive(&cfg.params)?;
    for j in 1..=derived.levels() {
        writeln!(
            out,
            "j={j} b={} lambda={} alpha_bar={}",
            derived.b(j),
            derived.lambda(j),
            derived.alpha_bar(j)
        )?;
    }
    writeln!(out, "first_best={}", derived.first_best)?;
    let report = check_assumptions(&cfg.params, &derived);
    print_report(&report, out)?;
    Ok(if report.overall {
        EXIT_PASS
    } else {
        EXIT_CONDITION
    })
}

struct Solved {
    vf: ValueFunctions,
    report: AssumptionReport,
    seconds: f64,
}

fn solve(cfg: &RunConfig) -> Result<Solved> {
    let start = Instant::now();
    let vf = build_all(&cfg.params, &cfg.settings)?;
    let report = check_assumptions(&vf.params, &vf.derived);
    Ok(Solved {
        vf,
        report,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn write_manifest(
    dir: &Path,
    command: Command,
    cfg: &RunConfig,
    solved: &Solved,
    timings: &[(&str, f64)],
) -> Result<()> {
    let csv = export::values_csv(&solved.vf);
    let mut m = RunManifest::new(command.name(), cfg, &solved.vf, &solved.report, &csv);
    m.push("timing.solve_seconds", solved.seconds);
    for (k, v) in timings {
        m.push(format!("timing.{k}_seconds"), v);
    }
    std::fs::write(dir.join(manifest::MANIFEST_FILE), m.render())?;
    Ok(())
}

fn cmd_solve(cli: &Cli, cfg: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    let solved = solve(cfg)?;
    let vf = &solved.vf;
    let dir = out_dir(cli)?;
    let written = if cli.command == Command::Export {
        export::export_plotdata(vf, &dir)?
    } else {
        let values = dir.join(export::VALUES_FILE);
        let bounds = dir.join(export::BOUNDARIES_FILE);
        std::fs::write(&values, export::values_csv(vf))?;
        std::fs::write(&bounds, export::boundaries_csv(vf))?;
        vec![values, bounds]
    };
    write_manifest(&dir, cli.command, cfg, &solved, &[])?;

    for l in &vf.levels {
        writeln!(out, "j={} b={} gamma={} vbar={}", l.j, l.b, l.gamma, l.vbar)?;
    }
    for h in &vf.meta.hyp_lambda {
        writeln!(out, "hyp-lambda j={} lhs={} rhs={}", h.j, h.lhs, h.rhs)?;
    }
    let shape = check_shape(vf);
    writeln!(
        out,
        "shape={}",
        if shape.passed() { "pass" } else { "fail" }
    )?;
    for p in written {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(if shape.passed() {
        EXIT_PASS
    } else {
        EXIT_CONDITION
    })
}

fn sim_config(cfg: &RunConfig, vf: &ValueFunctions) -> SimConfig {
    let u0 = cfg
        .u0
        .resolve(*vf.gammas().last().expect("at least one level"));
    SimConfig {
        shirk: cfg.shirk.clone(),
        ..SimConfig::new(cfg.n_paths, cfg.seed, u0, vf.loans())
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Deterministic report of one simulation against its targets.
pub fn simulate_report(res: &SimResult, target_bank: f64, target_investor: f64) -> (String, bool) {
    let bank_ok = res.bank_within(target_bank, SE_BAND);
    let inv_ok = res.investor_within(target_investor, SE_BAND);
    let text = format!(
        "paths={}\nflagged={}\nseed={}\nu0={:.16e}\n\
         bank mean={:.16e} se={:.16e} target={:.16e} {}\n\
         investor mean={:.16e} se={:.16e} target={:.16e} {}\n\
         result={}\n",
        res.n_paths,
        res.flagged,
        res.config.master_seed,
        res.config.u0,
        res.mean_bank,
        res.se_bank,
        target_bank,
        verdict(bank_ok),
        res.mean_investor,
        res.se_investor,
        target_investor,
        verdict(inv_ok),
        verdict(bank_ok && inv_ok)
    );
    (text, bank_ok && inv_ok)
}

fn cmd_simulate(cli: &Cli, cfg: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    let solved = solve(cfg)?;
    let vf = &solved.vf;
    let pol = ContractPolicy::new(vf);
    let mut sim = sim_config(cfg, vf);
    sim.shirk = vec![0; vf.loans()];
    let target_investor = vf.eval(vf.loans(), sim.u0)?;

    let start = Instant::now();
    let res = if cli.events {
        sim.record_events = true;
        let paths = mcsim::simulate_paths(&vf.params, &pol, &sim)?;
        let dir = out_dir(cli)?;
        let file = std::io::BufWriter::new(std::fs::File::create(dir.join(EVENTS_FILE))?);
        mcsim::write_events_csv(file, &paths)?;
        SimResult::from_paths(&paths, &sim)?
    } else {
        mcsim::estimate(&vf.params, &pol, &sim)?
    };
    let seconds = start.elapsed().as_secs_f64();

    let (text, ok) = simulate_report(&res, sim.u0, target_investor);
    out.write_all(text.as_bytes())?;
    if cli.out.is_some() {
        let dir = out_dir(cli)?;
        std::fs::write(dir.join(SIMULATE_FILE), &text)?;
        write_manifest(
            &dir,
            Command::Simulate,
            cfg,
            &solved,
            &[("simulate", seconds)],
        )?;
    }
    Ok(if ok { EXIT_PASS } else { EXIT_STATISTICAL })
}

fn cmd_ictest(cli: &Cli, cfg: &RunConfig, out: &mut dyn Write) -> Result<u8> {
    let solved = solve(cfg)?;
    let vf = &solved.vf;
    let pol = ContractPolicy::new(vf);
    let base = sim_config(cfg, vf);
    let full: Vec<u32> = (1..=vf.loans() as u32).collect();
    let mut profiles = Vec::new();
    if !base.is_monitoring() && base.shirk != full {
        profiles.push(("configured", base.shirk.clone()));
    }
    profiles.push(("full", full));

    let start = Instant::now();
    let mut text = format!("u0={:.16e}\n", base.u0);
    let mut all_ok = true;
    for (name, shirk) in profiles {
        let sim = SimConfig {
            shirk: shirk.clone(),
            ..base.clone()
        };
        let res = mcsim::deviation_utility(&vf.params, &pol, &sim)?;
        let ok = res.bank_at_most(base.u0, SE_BAND);
        all_ok &= ok;
        let listed: Vec<String> = shirk.iter().rev().map(u32::to_string).collect();
        text.push_str(&format!(
            "profile={name} shirk={} bank mean={:.16e} se={:.16e} bound={:.16e} {}\n",
            listed.join(","),
            res.mean_bank,
            res.se_bank,
            base.u0 + SE_BAND * res.se_bank,
            verdict(ok)
        ));
    }
    text.push_str(&format!("result={}\n", verdict(all_ok)));
    let seconds = start.elapsed().as_secs_f64();
    out.write_all(text.as_bytes())?;
    if cli.out.is_some() {
        let dir = out_dir(cli)?;
        std::fs::write(dir.join(ICTEST_FILE), &text)?;
        write_manifest(&dir, Command::Ictest, cfg, &solved, &[("ictest", seconds)])?;
    }
    Ok(if all_ok { EXIT_PASS } else { EXIT_STATISTICAL })
}
